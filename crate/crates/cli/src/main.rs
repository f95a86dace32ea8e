fn main() {
    std::process::exit(fracperc_cli::main_with_args(std::env::args_os()));
}
