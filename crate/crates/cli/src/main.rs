fn main() {
    std::process::exit(fourws_cli::app::run(std::env::args_os()));
}
