fn main() {
    std::process::exit(detseg::cli::run(std::env::args_os()));
}
