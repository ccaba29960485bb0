fn main() {
    std::process::exit(tmlab::cli::run());
}
