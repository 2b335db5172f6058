fn main() {
    let args: Vec<String> = std::env::args().collect();
    let mut out = std::io::stdout().lock();
    std::process::exit(lowrank_envelope::cli::run(&args, &mut out));
}
