fn main() {
    std::process::exit(srtk::cli::run(std::env::args_os()));
}
