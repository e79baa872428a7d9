fn main() {
    std::process::exit(metricgraph_cli::run(std::env::args_os()));
}
