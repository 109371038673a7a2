fn main() {
    std::process::exit(wavewell::cli::main());
}
