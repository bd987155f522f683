fn main() {
    std::process::exit(wass_hj::cli::main_with_args(std::env::args_os()));
}
