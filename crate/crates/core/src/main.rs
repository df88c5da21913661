fn main() {
    std::process::exit(bnpirt::cli::run(std::env::args_os()));
}
