fn main() {
    std::process::exit(robust_erm::cli::run(std::env::args_os()));
}
