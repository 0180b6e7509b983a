fn main() {
    std::process::exit(bssn_lab::cli::run(std::env::args_os()));
}
