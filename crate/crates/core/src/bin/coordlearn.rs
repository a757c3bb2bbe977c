fn main() -> std::process::ExitCode {
    coordlearn::cli::main()
}
