fn main() {
    std::process::exit(nullclust_cli::run(std::env::args_os()));
}
