fn main() {
    std::process::exit(multibell::cli::main_with_args(std::env::args_os()));
}
