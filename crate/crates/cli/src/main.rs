fn main() {
    std::process::exit(qvqe::main_with(std::env::args_os()));
}
