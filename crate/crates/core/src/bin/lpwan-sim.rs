fn main() {
    std::process::exit(lpwan_sim::cli::main_with_args(std::env::args_os()));
}
