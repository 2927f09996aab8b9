fn main() {
    std::process::exit(medmediate::cli::run(std::env::args_os()));
}
