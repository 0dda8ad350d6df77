fn main() {
    std::process::exit(clotseg_cli::main_with_args(std::env::args_os()));
}
