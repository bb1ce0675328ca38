fn main() {
    std::process::exit(qchan_cli::run(std::env::args_os()));
}
