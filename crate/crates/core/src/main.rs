fn main() {
    std::process::exit(rjsp::cli::run(std::env::args_os()));
}
