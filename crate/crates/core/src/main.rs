fn main() {
    std::process::exit(xzmip::cli::run(std::env::args_os()));
}
