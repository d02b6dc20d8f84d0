fn main() {
    std::process::exit(kvgeom::cli::main());
}
