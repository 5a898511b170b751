fn main() {
    std::process::exit(trigzeros_cli::run(std::env::args_os()));
}
