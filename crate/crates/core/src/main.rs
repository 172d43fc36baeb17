fn main() {
    std::process::exit(thermovisc::cli::main_with_args(std::env::args_os()));
}
