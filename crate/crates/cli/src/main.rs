fn main() {
    std::process::exit(mlread_cli::run(std::env::args_os()));
}
