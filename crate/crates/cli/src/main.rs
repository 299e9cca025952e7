fn main() { std::process::exit(dyadflow_cli::cli_main(std::env::args().collect())); }
