fn main() {
    std::process::exit(aivat_cli::run(std::env::args_os()));
}
