fn main() {
    std::process::exit(kelos::cli::main_entry());
}
