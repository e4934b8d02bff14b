fn main() {
    std::process::exit(srcseek::cli::run_cli(std::env::args_os()));
}
