fn main() {
    std::process::exit(stubborn_usd::cli::run(std::env::args_os()));
}
