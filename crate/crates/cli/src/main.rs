fn main() {
    std::process::exit(giffel_cli::run(std::env::args_os()));
}
