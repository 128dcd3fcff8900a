fn main() {
    std::process::exit(qaoa_lab_cli::run_cli(std::env::args_os()));
}
