fn main() {
    std::process::exit(distal_core::cli::run(std::env::args_os()));
}
