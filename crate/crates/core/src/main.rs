fn main() {
    std::process::exit(friabilis::cli::run(std::env::args_os()));
}
