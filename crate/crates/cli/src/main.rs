fn main() {
    std::process::exit(longevity_cli::run(std::env::args_os()));
}
