fn main() {
    std::process::exit(covsep::cli::run(std::env::args_os()));
}
