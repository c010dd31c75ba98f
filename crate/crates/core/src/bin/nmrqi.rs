fn main() {
    std::process::exit(nmrqi::cli::main_with_args(std::env::args_os()));
}
