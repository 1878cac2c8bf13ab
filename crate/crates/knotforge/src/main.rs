fn main() {
    std::process::exit(knotforge::cli::run());
}
