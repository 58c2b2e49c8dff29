//! Prints the canonical form of a `.kb` file.

fn main() {
    let path = std::env::args().nth(1).expect("usage: canon FILE");
    let text = std::fs::read_to_string(path).expect("readable file");
    match hybridkr::dsl::load(&text) {
        Ok(loaded) => print!("{}", hybridkr::dsl::serialize(&loaded.kb)),
        Err(diags) => {
            for d in diags {
                eprintln!("{d}");
            }
            std::process::exit(2);
        }
    }
}
