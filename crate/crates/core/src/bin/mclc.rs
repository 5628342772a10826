fn main() {
    mclc::cli::init_logging();
    std::process::exit(mclc::cli::run_from_args(std::env::args_os()));
}
