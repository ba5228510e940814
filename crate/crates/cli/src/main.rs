fn main() {
    std::process::exit(mcflab::run_cli(std::env::args_os()));
}
