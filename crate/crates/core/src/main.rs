fn main() {
    std::process::exit(recsys_lens::cli::run(std::env::args_os()));
}
