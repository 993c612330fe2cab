fn main() {
    std::process::exit(fibered_dyn::cli::main());
}
