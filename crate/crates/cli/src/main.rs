fn main() {
    std::process::exit(solitonlab_cli::run(std::env::args_os()));
}
