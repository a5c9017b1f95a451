fn main() {
    std::process::exit(uapforge::cli::main_with_args(std::env::args_os()));
}
