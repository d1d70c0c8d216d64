fn main() -> std::process::ExitCode {
    rotor_escape::cli::main()
}
