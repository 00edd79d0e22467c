fn main() {
    std::process::exit(rcfusion::cli::run_cli(std::env::args_os()));
}
