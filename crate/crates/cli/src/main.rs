fn main() {
    let code = photocalc_cli::run(std::env::args_os());
    std::process::exit(code);
}
