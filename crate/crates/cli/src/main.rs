fn main() {
    std::process::exit(pfkit_cli::run(std::env::args_os()));
}
