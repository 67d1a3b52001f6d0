fn main() {
    std::process::exit(pwbp::cli::parse_and_run(std::env::args_os()));
}
