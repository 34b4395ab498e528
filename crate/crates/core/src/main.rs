fn main() {
    std::process::exit(monmdp::cli::run(std::env::args_os()));
}
