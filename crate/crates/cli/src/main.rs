fn main() {
    std::process::exit(asjq_cli::cli_main(std::env::args_os()));
}
