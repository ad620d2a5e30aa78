fn main() {
    std::process::exit(neelwall::cli::run(std::env::args_os()));
}
