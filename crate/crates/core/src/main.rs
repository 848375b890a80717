fn main() {
    std::process::exit(aerocontact::cli::run(std::env::args_os()));
}
