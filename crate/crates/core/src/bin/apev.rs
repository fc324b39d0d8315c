fn main() {
    std::process::exit(apev::cli::run(std::env::args_os()));
}
