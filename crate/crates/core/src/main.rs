fn main() {
    std::process::exit(cqconverse::cli::main_with_args(std::env::args_os()));
}
