fn main() {
    std::process::exit(otbarriers_cli::app::run(std::env::args_os()));
}
