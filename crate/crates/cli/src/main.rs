fn main() {
    std::process::exit(tsqa_cli::run(std::env::args_os()));
}
