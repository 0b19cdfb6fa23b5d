fn main() {
    std::process::exit(bbl_cli::run(std::env::args_os()));
}
