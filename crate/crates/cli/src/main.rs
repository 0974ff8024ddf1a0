fn main() {
    std::process::exit(cjfeast_cli::run(std::env::args_os()));
}
