fn main() {
    std::process::exit(dirbeam::cli::main_with_args(std::env::args_os()));
}
