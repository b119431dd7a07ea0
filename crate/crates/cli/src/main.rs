fn main() -> std::process::ExitCode {
    tae_cli::run(std::env::args_os())
}
