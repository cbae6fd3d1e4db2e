fn main() {
    std::process::exit(msknot::cli::main_entry());
}
