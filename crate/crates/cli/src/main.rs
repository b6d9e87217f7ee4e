fn main() {
    std::process::exit(lnnd_cli::run(std::env::args().collect()));
}
