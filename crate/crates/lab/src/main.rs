fn main() {
    std::process::exit(sgn_lab::cli::run_cli(std::env::args_os()));
}
