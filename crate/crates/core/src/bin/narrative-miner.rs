fn main() {
    std::process::exit(narrative_miner::cli_report::run(std::env::args_os()));
}
