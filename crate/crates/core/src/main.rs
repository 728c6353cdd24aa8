fn main() {
    std::process::exit(hybrid_qft::cli::main_with_args(std::env::args_os()));
}
