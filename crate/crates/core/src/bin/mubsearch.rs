fn main() {
    std::process::exit(mubsearch::cli::run(std::env::args_os()));
}
