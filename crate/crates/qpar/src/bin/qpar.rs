fn main() {
    std::process::exit(qpar::cli::run_command(std::env::args_os()));
}
