fn main() {
    std::process::exit(cotrap::cli::run_cli(std::env::args_os()));
}
