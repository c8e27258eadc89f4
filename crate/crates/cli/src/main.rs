fn main() {
    std::process::exit(menshov_cli::run(std::env::args_os()));
}
