fn main() {
    std::process::exit(privshare::cli::main_with_args(std::env::args_os()));
}
