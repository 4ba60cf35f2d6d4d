fn main() {
    env_logger::init();
    let code = reas_bench::cli::run_cli(std::env::args_os());
    std::process::exit(code);
}
