use updatesim::cli;

fn main() {
    let code = cli::main_with(std::env::args_os().collect());
    std::process::exit(code);
}
