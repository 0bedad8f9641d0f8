fn main() {
    std::process::exit(fundus_cli::run(std::env::args_os()));
}
