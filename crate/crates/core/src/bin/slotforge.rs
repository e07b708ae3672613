fn main() -> std::process::ExitCode {
    slotforge::cli::main_from_env()
}
