fn main() {
    let out = repspace::cli::run(std::env::args().collect());
    print!("{}", out.stdout);
    eprint!("{}", out.stderr);
    std::process::exit(out.exit);
}
