fn main() {
    std::process::exit(dichotomy_kit::cli_io::run(std::env::args_os()));
}
