fn main() {
    eprintln!("gridplan CLI: not wired up yet");
    std::process::exit(2);
}
