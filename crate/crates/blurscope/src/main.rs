fn main() {
    std::process::exit(blurscope::cli::run(std::env::args_os()));
}
