fn main() -> std::process::ExitCode {
    hoicue::cli::main_with_args(std::env::args_os())
}
