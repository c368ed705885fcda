fn main() {
    std::process::exit(fraclab::cli::main());
}
