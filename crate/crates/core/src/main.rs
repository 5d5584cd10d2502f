fn main() {
    std::process::exit(heckelab::cli::main_with_args(std::env::args_os()));
}
