fn main() {
    std::process::exit(foci::cli::run(std::env::args_os()));
}
