//! Writes a synthetic recipe corpus in the public export's JSON schema.
//!
//! `cargo run --release -p cuisine-core --example synth_corpus -- out.json [recipes] [ingredients] [seed]`

use cuisine_core::synthetic::{to_json, SyntheticConfig};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(out) = args.first() else {
        eprintln!("usage: synth_corpus OUT.json [recipes] [ingredients] [seed]");
        std::process::exit(1);
    };
    let mut config = SyntheticConfig::default();
    let num = |i: usize| args.get(i).map(|s| s.parse::<u64>().expect("numeric argument"));
    if let Some(n) = num(1) {
        config.recipes = n as usize;
    }
    if let Some(n) = num(2) {
        config.ingredients = n as usize;
    }
    if let Some(n) = num(3) {
        config.seed = n;
    }
    std::fs::write(out, to_json(&config)).expect("write corpus");
}
