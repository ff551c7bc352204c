fn main() {
    let code = discobench::cli::main_with(std::env::args(), &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
