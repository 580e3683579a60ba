fn main() {
    std::process::exit(ldp_hull::cli::main_with_args(std::env::args_os()));
}
