fn main() {
    std::process::exit(qktsne_cli::main_with_args(std::env::args_os()));
}
