fn main() {
    std::process::exit(mia_cli::run(std::env::args_os()));
}
