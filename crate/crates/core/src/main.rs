fn main() {
    std::process::exit(vhip::cli::run(std::env::args_os()));
}
