fn main() {
    std::process::exit(nlkpp::run());
}
