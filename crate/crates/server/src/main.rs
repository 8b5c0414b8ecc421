fn main() -> std::process::ExitCode {
    cgs_server::cli::main()
}
