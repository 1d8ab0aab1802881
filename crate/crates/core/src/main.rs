fn main() {
    std::process::exit(hwdec_energy::cli::run(std::env::args_os()));
}
