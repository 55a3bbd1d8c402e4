fn main() {
    std::process::exit(lattes_da::cli::main_with_args(std::env::args_os()));
}
