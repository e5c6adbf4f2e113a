fn main() {
    std::process::exit(quantbench_cli::run(std::env::args_os()));
}
