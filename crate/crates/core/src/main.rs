fn main() {
    std::process::exit(evtrade::app::main_with_args(std::env::args_os()));
}
