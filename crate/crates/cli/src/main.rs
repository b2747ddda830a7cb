fn main() {
    std::process::exit(rankinfer_cli::main_with_args(std::env::args_os()));
}
