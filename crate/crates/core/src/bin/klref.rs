fn main() {
    std::process::exit(klref::app::main_from_args(std::env::args_os()));
}
