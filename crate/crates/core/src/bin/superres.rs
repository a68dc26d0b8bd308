fn main() {
    std::process::exit(superres::runner::cli::run(std::env::args_os()));
}
