fn main() {
    std::process::exit(rowcon::cli::main_with(std::env::args_os()));
}
