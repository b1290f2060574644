fn main() {
    std::process::exit(rfcw_core::cli::cli_main(std::env::args_os()));
}
