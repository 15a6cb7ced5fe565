fn main() {
    std::process::exit(metric_clt::cli::run(std::env::args_os()));
}
