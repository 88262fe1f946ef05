fn main() {
    std::process::exit(selfmine::cli::main_with_args(std::env::args_os()));
}
