fn main() {
    std::process::exit(surfnav_cli::run_cli(std::env::args_os()));
}
