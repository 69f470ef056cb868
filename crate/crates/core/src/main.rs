fn main() {
    std::process::exit(calabi_lab::cli::dispatch(std::env::args_os()));
}
