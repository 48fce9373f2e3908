fn main() {
    std::process::exit(ve_fracture::cli_io::cli_dispatch(std::env::args_os()));
}
