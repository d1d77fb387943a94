fn main() {
    std::process::exit(chemotaxis_core::cli::run_from_args(std::env::args_os()));
}
