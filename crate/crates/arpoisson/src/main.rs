fn main() {
    std::process::exit(arpoisson::cli::run(std::env::args_os()));
}
