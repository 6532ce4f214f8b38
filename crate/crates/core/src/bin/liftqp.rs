fn main() {
    std::process::exit(liftqp::cli::run(std::env::args_os()));
}
