fn main() {
    std::process::exit(renewal_coupling::cli::run(std::env::args_os()));
}
