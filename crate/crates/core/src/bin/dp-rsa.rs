fn main() {
    std::process::exit(dp_rsa::cli::run_cli(std::env::args_os()));
}
