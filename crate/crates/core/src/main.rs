fn main() {
    std::process::exit(eltqc::cli::run(std::env::args_os()));
}
