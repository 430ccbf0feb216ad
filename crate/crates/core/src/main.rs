fn main() {
    std::process::exit(coherent_torus::harness::run(std::env::args_os()));
}
