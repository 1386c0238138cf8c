fn main() {
    std::process::exit(perspface::cli::main_with_args(std::env::args_os()));
}
