//! The `svm-run` pipeline driven through the library entry point of the CLI.

fn main() {
    let args = ["liftqp", "svm-run", "--n", "120", "--noise-dim", "20", "--labeled", "12", "--seed", "3"];
    let code = liftqp::cli::run(args);
    std::process::exit(code);
}
