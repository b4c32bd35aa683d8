fn main() {
    std::process::exit(consolidate_cli::run(std::env::args_os()));
}
