fn main() {
    std::process::exit(octopus::cli::main_with_args(std::env::args_os()));
}
