fn main() {
    std::process::exit(heavytail::cli::run(std::env::args_os()));
}
