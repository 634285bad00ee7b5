fn main() {
    std::process::exit(adaptive_sampling::harness::cli::run_cli(std::env::args_os()));
}
