fn main() {
    std::process::exit(lltboost::cli::run(std::env::args_os()));
}
