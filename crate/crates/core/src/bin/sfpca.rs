fn main() {
    std::process::exit(sfpca::cli::run_from_args(std::env::args_os()));
}
