fn main() {
    rtspn::cli::init_logging();
    std::process::exit(rtspn::cli::run());
}
