fn main() {
    std::process::exit(boolclass::cli::run(std::env::args_os()));
}
