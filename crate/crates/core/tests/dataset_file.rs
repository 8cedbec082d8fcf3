use std::fs::{self, OpenOptions};

use rfsynth::dataset::{
    generate_example, mix_seed, synthesize_signals, write_dataset, DatasetReader, Task, TaskPreset,
};
use rfsynth::Error;

fn preset(name: &str) -> TaskPreset {
    TaskPreset::by_name(name).unwrap()
}

#[test]
fn round_trip_is_field_exact() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["amc-desk", "regression-desk", "symbols-desk", "demod-desk"] {
        let p = preset(name);
        let path = dir.path().join(format!("{name}.rfds"));
        let header = write_dataset(&path, &p, 9, 0, 40, 2).unwrap();
        let reader = DatasetReader::open(&path).unwrap();
        assert_eq!(reader.header(), &header);
        assert_eq!(reader.header().preset, p);
        for (i, ex) in reader.iter().unwrap().enumerate() {
            assert_eq!(
                ex.unwrap(),
                generate_example(&p, i as u64, 9).unwrap(),
                "{name} #{i}"
            );
        }
    }
}

#[test]
fn validation_split_keeps_global_indices() {
    let dir = tempfile::tempdir().unwrap();
    let p = preset("regression-desk");
    let path = dir.path().join("val.rfds");
    write_dataset(&path, &p, 5, p.train_count, 10, 1).unwrap();
    let back = DatasetReader::open(&path).unwrap().read_all().unwrap();
    for (k, ex) in back.iter().enumerate() {
        let index = p.train_count + k as u64;
        assert_eq!(ex.index, index);
        assert_eq!(*ex, generate_example(&p, index, 5).unwrap());
    }
}

#[test]
fn bytes_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let p = preset("symbols-desk");
    let files: Vec<Vec<u8>> = [1, 2, 5]
        .into_iter()
        .map(|t| {
            let path = dir.path().join(format!("t{t}.rfds"));
            write_dataset(&path, &p, 17, 0, 600, t).unwrap();
            fs::read(path).unwrap()
        })
        .collect();
    assert_eq!(files[0], files[1]);
    assert_eq!(files[0], files[2]);

    let other = dir.path().join("other.rfds");
    write_dataset(&other, &p, 18, 0, 600, 1).unwrap();
    assert_ne!(fs::read(other).unwrap(), files[0]);
}

#[test]
fn empty_dataset_has_a_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.rfds");
    write_dataset(&path, &preset("amc-desk"), 1, 0, 0, 1).unwrap();
    let mut reader = DatasetReader::open(&path).unwrap();
    assert!(reader.is_empty());
    assert_eq!(reader.iter().unwrap().count(), 0);
    assert!(matches!(
        reader.get(0),
        Err(Error::IndexOutOfRange { index: 0, count: 0 })
    ));
}

#[test]
fn corrupt_magic_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.rfds");
    write_dataset(&path, &preset("demod-desk"), 1, 0, 2, 1).unwrap();
    let mut bytes = fs::read(&path).unwrap();
    bytes[0] = b'X';
    fs::write(&path, &bytes).unwrap();
    assert!(matches!(
        DatasetReader::open(&path),
        Err(Error::BadMagic(_))
    ));

    fs::write(&path, b"RF").unwrap();
    assert!(matches!(
        DatasetReader::open(&path),
        Err(Error::BadMagic(_))
    ));
}

#[test]
fn truncated_last_record_names_its_index() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trunc.rfds");
    write_dataset(&path, &preset("amc-desk"), 3, 0, 5, 1).unwrap();
    let len = fs::metadata(&path).unwrap().len();
    OpenOptions::new()
        .write(true)
        .open(&path)
        .unwrap()
        .set_len(len - 10)
        .unwrap();
    let reader = DatasetReader::open(&path).unwrap();
    let results: Vec<_> = reader.iter().unwrap().collect();
    assert_eq!(results.len(), 5);
    assert!(results[..4].iter().all(|r| r.is_ok()));
    assert!(matches!(results[4], Err(Error::Truncated(4))));
    assert!(matches!(reader.read_all(), Err(Error::Truncated(4))));
}

#[test]
fn random_access_matches_iteration() {
    let dir = tempfile::tempdir().unwrap();
    // demod: mixed bit widths (offset scan); regression: fixed QPSK width
    // but varying message length; symbols: fixed width and varying length.
    for name in ["demod-desk", "regression-desk", "amc-desk"] {
        let path = dir.path().join(format!("{name}.rfds"));
        write_dataset(&path, &preset(name), 8, 0, 30, 0).unwrap();
        let mut reader = DatasetReader::open(&path).unwrap();
        let all = reader.read_all().unwrap();
        for k in [29, 0, 13, 3] {
            assert_eq!(reader.get(k).unwrap(), all[k as usize]);
        }
        assert!(matches!(reader.get(30), Err(Error::IndexOutOfRange { .. })));
    }
}

#[test]
fn labels_regenerate_the_stored_signals() {
    for name in ["amc-desk", "demod-desk", "regression-desk"] {
        let p = preset(name);
        for i in 0..10 {
            let ex = generate_example(&p, i, 21).unwrap();
            let (tx, rx) = synthesize_signals(&ex, &p).unwrap();
            assert_eq!(tx, ex.tx);
            assert_eq!(rx, ex.rx);
            assert_eq!(ex.tx.len(), p.frame_length);
            assert_eq!(ex.symbols.len(), ex.n_symbols);
            assert_eq!(
                ex.bits.len(),
                ex.n_symbols * ex.modulation.bits_per_symbol()
            );
            assert!(p.modulations.contains(&ex.modulation));
        }
    }
}

#[test]
fn preset_shapes() {
    let amc = preset("amc-desk");
    assert_eq!(amc.task, Task::Amc);
    assert_eq!(amc.frame_length, 512);
    assert_eq!(amc.modulations.len(), 13);
    let mut seen_sps = std::collections::BTreeSet::new();
    for i in 0..400 {
        let ex = generate_example(&amc, i, 2).unwrap();
        assert_eq!(ex.n_symbols, 512 / ex.sps);
        seen_sps.insert(ex.sps);
    }
    assert_eq!(seen_sps, (16..=32).collect());

    let demod = preset("demod-desk");
    let ex = generate_example(&demod, 0, 2).unwrap();
    assert_eq!((ex.sps, ex.n_symbols, ex.tx.len()), (4, 256, 1024));
    assert_eq!(demod.profile.name, "mild");

    let reg = preset("regression-desk");
    assert_eq!(reg.profile.name, "medium");
    let mut seen = std::collections::BTreeSet::new();
    for i in 0..200 {
        seen.insert(generate_example(&reg, i, 2).unwrap().sps);
    }
    assert_eq!(seen, (8..=16).collect());

    let sym = preset("symbols-desk");
    let mut counts = std::collections::BTreeSet::new();
    for i in 0..400 {
        let ex = generate_example(&sym, i, 2).unwrap();
        assert_eq!(ex.sps, 512 / ex.n_symbols);
        counts.insert(ex.n_symbols);
    }
    assert_eq!(counts.len(), 17);

    let full = preset("amc-full");
    assert_eq!(full.train_count, (1 << 14) * 13);
    assert_eq!(full.val_count, (1 << 11) * 13);
    let full = preset("demod-full");
    assert_eq!(full.train_count, (1 << 16) * 3);
    assert_eq!(preset("amc-desk").train_count, 1 << 10);
    assert_eq!(preset("amc-desk").val_count, 1 << 8);
}

#[test]
fn bit_streams_are_uncorrelated_across_indices() {
    let p = preset("demod-desk");
    let streams: Vec<Vec<f64>> = (0..40)
        .map(|i| {
            let ex = generate_example(&p, i, 99).unwrap();
            ex.bits
                .iter()
                .take(256)
                .map(|&b| 2.0 * b as f64 - 1.0)
                .collect()
        })
        .collect();
    let mut sum = 0.0;
    let mut pairs = 0;
    for a in 0..streams.len() {
        for b in a + 1..streams.len() {
            let r: f64 = streams[a]
                .iter()
                .zip(&streams[b])
                .map(|(x, y)| x * y)
                .sum::<f64>()
                / 256.0;
            assert!(r.abs() < 0.3, "{a},{b}: {r}");
            sum += r;
            pairs += 1;
        }
    }
    assert!((sum / pairs as f64).abs() < 0.02);
    assert_ne!(mix_seed(0, 0), mix_seed(0, 1));
    assert_ne!(mix_seed(0, 1), mix_seed(1, 0));
}

#[test]
fn unknown_preset_lists_valid_names() {
    let err = TaskPreset::by_name("amc-huge").unwrap_err();
    let msg = err.to_string();
    for name in ["amc-desk", "demod-full"] {
        assert!(msg.contains(name), "{msg}");
    }
}

#[test]
fn count_beyond_split_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = preset("demod-desk");
    let err = write_dataset(dir.path().join("x"), &p, 1, 0, p.total_count() + 1, 1).unwrap_err();
    assert!(matches!(err, Error::IndexOutOfRange { .. }));
}
