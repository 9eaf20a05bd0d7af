fn main() {
    std::process::exit(neurocorr::harness::cli::run(std::env::args_os()));
}
