fn main() {
    std::process::exit(cs2_cli::run(std::env::args_os()));
}
