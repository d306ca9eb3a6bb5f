fn main() {
    std::process::exit(gcconvex::cli::run(std::env::args_os()));
}
