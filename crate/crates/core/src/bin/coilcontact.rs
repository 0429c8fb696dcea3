fn main() {
    std::process::exit(coilcontact::cli::main_with_args(std::env::args_os()));
}
