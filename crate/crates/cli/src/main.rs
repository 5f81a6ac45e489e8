fn main() {
    std::process::exit(clustersift_cli::run(std::env::args_os()));
}
