fn main() {
    std::process::exit(mixedreg_cli::run(std::env::args_os()));
}
