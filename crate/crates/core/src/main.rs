fn main() {
    std::process::exit(bvbfv::cli::main_with_args(std::env::args_os()));
}
