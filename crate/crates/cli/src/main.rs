fn main() {
    std::process::exit(spectral_te_cli::run(std::env::args_os()));
}
