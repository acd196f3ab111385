fn main() {
    std::process::exit(lrca::cli::run(std::env::args_os()));
}
