fn main() {
    std::process::exit(hallbath::cli::run(std::env::args_os()));
}
