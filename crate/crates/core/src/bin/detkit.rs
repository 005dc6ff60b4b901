fn main() {
    std::process::exit(detkit::cli::run(std::env::args_os()));
}
