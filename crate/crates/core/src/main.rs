fn main() {
    std::process::exit(compriv::cli::run(std::env::args_os()));
}
