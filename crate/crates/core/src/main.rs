fn main() {
    std::process::exit(mtasa_core::cli::run(std::env::args_os()));
}
