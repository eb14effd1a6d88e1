fn main() {
    std::process::exit(mm_pmbm::cli::run_cli(std::env::args_os()));
}
