fn main() {
    std::process::exit(fpsi::cli::run_cli(std::env::args_os()));
}
