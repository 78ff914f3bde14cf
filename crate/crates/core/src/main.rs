fn main() -> std::process::ExitCode {
    ctrlsimp::cli::main()
}
