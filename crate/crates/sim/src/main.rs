fn main() {
    std::process::exit(harvester_sim::cli::cli_main(std::env::args_os()));
}
