fn main() {
    std::process::exit(hankel_lab::cli::run(std::env::args_os()));
}
