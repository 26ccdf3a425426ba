fn main() {
    std::process::exit(besselopt::cli::run());
}
