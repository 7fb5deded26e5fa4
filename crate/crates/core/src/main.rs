fn main() -> std::process::ExitCode {
    splithygiene::cli::main()
}
