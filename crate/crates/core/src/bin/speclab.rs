fn main() {
    let args: Vec<String> = std::env::args().collect();
    std::process::exit(speclab::cli::run_args(&args));
}
