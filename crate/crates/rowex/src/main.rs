fn main() -> std::process::ExitCode {
    rowex::main_with(std::env::args_os())
}
