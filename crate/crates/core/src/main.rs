fn main() {
    let code = omplab::cli::run(std::env::args_os());
    std::process::exit(code);
}
