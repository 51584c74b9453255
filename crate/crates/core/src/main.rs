fn main() {
    std::process::exit(eraser_sim::cli::run());
}
