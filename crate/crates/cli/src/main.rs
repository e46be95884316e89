fn main() {
    std::process::exit(holonomy_lab_cli::run_from_args(std::env::args_os()));
}
