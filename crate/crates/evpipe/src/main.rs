fn main() {
    std::process::exit(evpipe::run(std::env::args_os()));
}
