fn main() {
    std::process::exit(meshsplat::cli::run(std::env::args_os()));
}
