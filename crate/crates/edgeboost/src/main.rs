fn main() {
    std::process::exit(edgeboost::cli::main());
}
