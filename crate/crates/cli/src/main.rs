fn main() {
    std::process::exit(capvar_cli::run(std::env::args_os()));
}
