fn main() {
    std::process::exit(lipdse::cli::run(std::env::args_os()));
}
