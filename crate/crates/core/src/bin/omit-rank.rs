fn main() {
    std::process::exit(omit_rank::cli::run(std::env::args_os()));
}
