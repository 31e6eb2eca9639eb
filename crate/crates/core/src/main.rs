fn main() {
    std::process::exit(tchern::cli::run(std::env::args_os()));
}
