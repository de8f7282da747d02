fn main() {
    std::process::exit(pinocchio_lab::cli::run(std::env::args_os()));
}
