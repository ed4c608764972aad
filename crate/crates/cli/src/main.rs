fn main() {
    std::process::exit(nodiscard_cli::main_from_env());
}
