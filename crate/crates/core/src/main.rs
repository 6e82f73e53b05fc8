fn main() {
    std::process::exit(vidmas::gateway::cli::run(std::env::args_os()));
}
