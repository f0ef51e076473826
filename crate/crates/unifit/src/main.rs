fn main() {
    std::process::exit(unifit::cli::main());
}
