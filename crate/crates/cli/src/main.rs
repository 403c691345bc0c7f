fn main() {
    std::process::exit(nrdk_cli::main_with_args(std::env::args_os()));
}
