fn main() {
    let args: Vec<String> = std::env::args().collect();
    std::process::exit(fdhybf_cli::cli_main(args));
}
