fn main() {
    std::process::exit(holeburn_cli::main_with_args(std::env::args_os()));
}
