//! Python bindings for `rfsynth`.

use num_complex::Complex64;
use pyo3::exceptions::{PyIOError, PyIndexError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rfsynth::channel::{self, ChannelProfile};
use rfsynth::constellations::{self as cons, Modulation, SymbolSequence};
use rfsynth::dataset::{self, DatasetReader, TaskPreset, PRESET_NAMES};
use rfsynth::metrics::{self, OracleMode};
use rfsynth::waveform::{self, IqFrame, DEFAULT_SPAN};
use rfsynth::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } | Error::BadMagic(_) | Error::Truncated(_) => {
            PyIOError::new_err(e.to_string())
        }
        Error::IndexOutOfRange { .. } => PyIndexError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn modulation(m: &str) -> PyResult<Modulation> {
    m.parse().map_err(py_err)
}

/// Bits as a list of ints rather than `bytes`.
fn widen(bits: &[u8]) -> Vec<u32> {
    bits.iter().map(|&b| u32::from(b)).collect()
}

fn preset(name: &str) -> PyResult<TaskPreset> {
    TaskPreset::by_name(name).map_err(py_err)
}

/// Constellation table entry.
#[pyclass(name = "Constellation", frozen, from_py_object)]
#[derive(Clone)]
struct PyConstellation {
    #[pyo3(get)]
    id: u8,
    #[pyo3(get)]
    name: &'static str,
    #[pyo3(get)]
    bits_per_symbol: usize,
    #[pyo3(get)]
    points: Vec<Complex64>,
    #[pyo3(get)]
    bit_labels: Vec<u16>,
}

#[pymethods]
impl PyConstellation {
    fn __len__(&self) -> usize {
        self.points.len()
    }

    fn __repr__(&self) -> String {
        format!("Constellation({}, {} points)", self.name, self.points.len())
    }
}

#[pyfunction]
fn modulation_names() -> Vec<&'static str> {
    Modulation::ALL.iter().map(|m| m.name()).collect()
}

/// Look up a constellation by name ("16-QAM") or id ("8").
#[pyfunction]
fn constellation(name: &str) -> PyResult<PyConstellation> {
    let c = cons::build_constellation(modulation(name)?);
    Ok(PyConstellation {
        id: c.id(),
        name: c.name(),
        bits_per_symbol: c.bits_per_symbol(),
        points: c.points.clone(),
        bit_labels: c.bit_labels.clone(),
    })
}

/// Bits (0/1, MSB first) to symbol indices.
#[pyfunction]
fn modulate_bits(bits: Vec<u8>, modulation_name: &str) -> PyResult<Vec<u16>> {
    let c = cons::build_constellation(modulation(modulation_name)?);
    Ok(cons::modulate_bits(&bits, &c).map_err(py_err)?.indices)
}

/// Nearest-point decisions: `(indices, bits)`.
#[pyfunction]
fn hard_demap(points: Vec<Complex64>, modulation_name: &str) -> PyResult<(Vec<u16>, Vec<u32>)> {
    let c = cons::build_constellation(modulation(modulation_name)?);
    let (syms, bits) = cons::hard_demap(&points, &c);
    Ok((syms.indices, widen(&bits)))
}

#[pyfunction]
#[pyo3(signature = (beta, sps, span = DEFAULT_SPAN))]
fn rrc_taps(beta: f64, sps: usize, span: usize) -> PyResult<Vec<f64>> {
    Ok(waveform::rrc_taps(beta, sps, span).map_err(py_err)?.taps)
}

/// Pulse-shape symbol indices into a unit-power frame of `len * sps` samples.
#[pyfunction]
#[pyo3(signature = (symbols, modulation_name, sps, beta, span = DEFAULT_SPAN))]
fn shape(
    symbols: Vec<u16>,
    modulation_name: &str,
    sps: usize,
    beta: f64,
    span: usize,
) -> PyResult<Vec<Complex64>> {
    let m = modulation(modulation_name)?;
    let c = cons::build_constellation(m);
    let seq = SymbolSequence::new(m, symbols).map_err(py_err)?;
    let pulse = waveform::rrc_taps(beta, sps, span).map_err(py_err)?;
    Ok(waveform::shape(&seq, &c, &pulse).samples)
}

#[pyfunction]
#[pyo3(signature = (samples, sps, beta, span = DEFAULT_SPAN))]
fn matched_filter(
    samples: Vec<Complex64>,
    sps: usize,
    beta: f64,
    span: usize,
) -> PyResult<Vec<Complex64>> {
    let pulse = waveform::rrc_taps(beta, sps, span).map_err(py_err)?;
    Ok(waveform::matched_filter(&IqFrame::new(samples, sps), &pulse).samples)
}

#[pyclass(name = "ChannelParams", from_py_object)]
#[derive(Clone)]
struct PyChannelParams {
    inner: channel::ChannelParams,
}

#[pymethods]
impl PyChannelParams {
    #[new]
    #[pyo3(signature = (phase_offset = 0.0, freq_offset = 0.0, snr_db = f64::INFINITY, fading_eta = 0.0, fading_enabled = false, fading_seed = 0, n_scatterers = channel::DEFAULT_SCATTERERS))]
    fn new(
        phase_offset: f64,
        freq_offset: f64,
        snr_db: f64,
        fading_eta: f64,
        fading_enabled: bool,
        fading_seed: u64,
        n_scatterers: usize,
    ) -> Self {
        PyChannelParams {
            inner: channel::ChannelParams {
                phase_offset,
                freq_offset,
                snr_db,
                fading_eta,
                fading_enabled,
                fading_seed,
                n_scatterers,
            },
        }
    }

    #[getter]
    fn phase_offset(&self) -> f64 {
        self.inner.phase_offset
    }

    #[getter]
    fn freq_offset(&self) -> f64 {
        self.inner.freq_offset
    }

    #[getter]
    fn snr_db(&self) -> f64 {
        self.inner.snr_db
    }

    #[getter]
    fn fading_eta(&self) -> f64 {
        self.inner.fading_eta
    }

    #[getter]
    fn fading_enabled(&self) -> bool {
        self.inner.fading_enabled
    }

    #[getter]
    fn fading_seed(&self) -> u64 {
        self.inner.fading_seed
    }

    #[getter]
    fn n_scatterers(&self) -> usize {
        self.inner.n_scatterers
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// One draw from a named profile ("harsh", "medium", "mild").
#[pyfunction]
fn sample_channel(profile: &str, seed: u64) -> PyResult<PyChannelParams> {
    let p = ChannelProfile::by_name(profile).map_err(py_err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(PyChannelParams {
        inner: channel::sample_channel(&p, &mut rng),
    })
}

#[pyfunction]
#[pyo3(signature = (n_samples, eta, seed, n_scatterers = channel::DEFAULT_SCATTERERS))]
fn jakes_gain(n_samples: usize, eta: f64, seed: u64, n_scatterers: usize) -> Vec<Complex64> {
    channel::jakes_gain(n_samples, eta, n_scatterers, seed).gain
}

/// Fading, carrier offset, then AWGN drawn from `seed`.
#[pyfunction]
fn transmit(
    samples: Vec<Complex64>,
    sps: usize,
    params: PyChannelParams,
    seed: u64,
) -> PyResult<Vec<Complex64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rx =
        channel::transmit(&IqFrame::new(samples, sps), &params.inner, &mut rng).map_err(py_err)?;
    Ok(rx.samples)
}

/// Undo carrier offset and fading with known parameters.
#[pyfunction]
fn invert_channel(
    samples: Vec<Complex64>,
    sps: usize,
    params: PyChannelParams,
) -> PyResult<Vec<Complex64>> {
    let gain = params.inner.fading_gain(samples.len());
    let inv = metrics::invert_channel(&IqFrame::new(samples, sps), &params.inner, gain.as_ref())
        .map_err(py_err)?;
    Ok(inv.frame.samples)
}

#[pyfunction]
fn theoretical_ser(modulation_name: &str, esn0_db: f64) -> PyResult<f64> {
    metrics::theoretical_ser(modulation(modulation_name)?, esn0_db).map_err(py_err)
}

#[pyclass(name = "Example", frozen, from_py_object)]
#[derive(Clone)]
struct PyExample {
    inner: dataset::Example,
}

#[pymethods]
impl PyExample {
    #[getter]
    fn index(&self) -> u64 {
        self.inner.index
    }

    #[getter]
    fn modulation(&self) -> &'static str {
        self.inner.modulation.name()
    }

    #[getter]
    fn modulation_id(&self) -> u8 {
        self.inner.modulation.id()
    }

    #[getter]
    fn sps(&self) -> usize {
        self.inner.sps
    }

    #[getter]
    fn n_symbols(&self) -> usize {
        self.inner.n_symbols
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta
    }

    #[getter]
    fn example_seed(&self) -> u64 {
        self.inner.example_seed
    }

    #[getter]
    fn bits(&self) -> Vec<u32> {
        widen(&self.inner.bits)
    }

    #[getter]
    fn symbols(&self) -> Vec<u16> {
        self.inner.symbols.indices.clone()
    }

    #[getter]
    fn tx(&self) -> Vec<Complex64> {
        self.inner.tx.samples.clone()
    }

    #[getter]
    fn rx(&self) -> Vec<Complex64> {
        self.inner.rx.samples.clone()
    }

    #[getter]
    fn channel(&self) -> PyChannelParams {
        PyChannelParams {
            inner: self.inner.channel,
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "Example(index={}, modulation={}, sps={}, n_symbols={}, snr_db={})",
            self.inner.index,
            self.inner.modulation,
            self.inner.sps,
            self.inner.n_symbols,
            self.inner.channel.snr_db
        )
    }
}

#[pyfunction]
fn preset_names() -> Vec<&'static str> {
    PRESET_NAMES.to_vec()
}

#[pyfunction]
fn generate_example(preset_name: &str, index: u64, seed: u64) -> PyResult<PyExample> {
    let p = preset(preset_name)?;
    let inner = dataset::generate_example(&p, index, seed).map_err(py_err)?;
    Ok(PyExample { inner })
}

/// Writes `count` examples starting at `first_index`; returns the header as JSON.
#[pyfunction]
#[pyo3(signature = (path, preset_name, seed, count, first_index = 0, threads = 0))]
fn write_dataset(
    py: Python<'_>,
    path: std::path::PathBuf,
    preset_name: &str,
    seed: u64,
    count: u64,
    first_index: u64,
    threads: usize,
) -> PyResult<String> {
    let p = preset(preset_name)?;
    let header = py
        .detach(|| dataset::write_dataset(&path, &p, seed, first_index, count, threads))
        .map_err(py_err)?;
    serde_json::to_string(&header).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Random-access view of an RFDS file.
#[pyclass(name = "Dataset")]
struct PyDataset {
    reader: DatasetReader,
}

#[pymethods]
impl PyDataset {
    #[new]
    fn open(path: std::path::PathBuf) -> PyResult<Self> {
        Ok(PyDataset {
            reader: DatasetReader::open(path).map_err(py_err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.reader.len() as usize
    }

    fn __getitem__(&mut self, record: i64) -> PyResult<PyExample> {
        let n = self.reader.len() as i64;
        let k = if record < 0 { record + n } else { record };
        if k < 0 || k >= n {
            return Err(PyIndexError::new_err(format!(
                "record {record} out of range ({n})"
            )));
        }
        let inner = self.reader.get(k as u64).map_err(py_err)?;
        Ok(PyExample { inner })
    }

    #[getter]
    fn preset(&self) -> String {
        self.reader.header().preset.name.clone()
    }

    #[getter]
    fn task(&self) -> String {
        self.reader.header().preset.task.to_string()
    }

    #[getter]
    fn span(&self) -> usize {
        self.reader.header().preset.span
    }

    fn header_json(&self) -> PyResult<String> {
        serde_json::to_string(self.reader.header())
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }
}

/// Matched-filter symbol decisions for an example.
#[pyfunction]
#[pyo3(signature = (example, span = DEFAULT_SPAN, mode = "corrected"))]
fn oracle_demod(example: PyExample, span: usize, mode: &str) -> PyResult<Vec<u16>> {
    let mode = match mode {
        "corrected" => OracleMode::Corrected,
        "raw" => OracleMode::Raw,
        other => return Err(PyValueError::new_err(format!("unknown mode `{other}`"))),
    };
    metrics::oracle_demod(&example.inner, span, mode).map_err(py_err)
}

#[pymodule]
fn pyrfsynth(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConstellation>()?;
    m.add_class::<PyChannelParams>()?;
    m.add_class::<PyExample>()?;
    m.add_class::<PyDataset>()?;
    m.add_function(wrap_pyfunction!(modulation_names, m)?)?;
    m.add_function(wrap_pyfunction!(constellation, m)?)?;
    m.add_function(wrap_pyfunction!(modulate_bits, m)?)?;
    m.add_function(wrap_pyfunction!(hard_demap, m)?)?;
    m.add_function(wrap_pyfunction!(rrc_taps, m)?)?;
    m.add_function(wrap_pyfunction!(shape, m)?)?;
    m.add_function(wrap_pyfunction!(matched_filter, m)?)?;
    m.add_function(wrap_pyfunction!(sample_channel, m)?)?;
    m.add_function(wrap_pyfunction!(jakes_gain, m)?)?;
    m.add_function(wrap_pyfunction!(transmit, m)?)?;
    m.add_function(wrap_pyfunction!(invert_channel, m)?)?;
    m.add_function(wrap_pyfunction!(theoretical_ser, m)?)?;
    m.add_function(wrap_pyfunction!(preset_names, m)?)?;
    m.add_function(wrap_pyfunction!(generate_example, m)?)?;
    m.add_function(wrap_pyfunction!(write_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_demod, m)?)?;
    Ok(())
}
