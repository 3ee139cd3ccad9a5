fn main() {
    std::process::exit(imm::cli::run_from(std::env::args_os()));
}
