fn main() {
    std::process::exit(fcpca_cli::run(std::env::args_os()));
}
