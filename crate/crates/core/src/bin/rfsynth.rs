fn main() -> std::process::ExitCode {
    rfsynth::cli::run()
}
