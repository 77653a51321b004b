fn main() {
    std::process::exit(stackbench_cli::dispatch(std::env::args_os()));
}
