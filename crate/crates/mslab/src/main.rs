fn main() {
    std::process::exit(mslab::cli::main());
}
