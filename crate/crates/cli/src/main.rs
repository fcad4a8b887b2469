fn main() {
    std::process::exit(multicopy_cli::run(std::env::args_os()));
}
