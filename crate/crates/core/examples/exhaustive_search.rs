//! Exhaustive search to length 11 with a resumable ledger in a temporary
//! directory, followed by the per-length report.

use altproof::search::{exhaustive, report, ExhaustiveOptions, Progress};

fn main() {
    let dir = std::env::temp_dir().join("altproof-exhaustive-example");
    std::fs::create_dir_all(&dir).expect("temp dir");
    let ledger = dir.join("results.jsonl");
    let progress = |p: Progress| {
        if p.done == p.total {
            eprintln!("{} annotations done", p.done);
        }
    };
    let mut opts = ExhaustiveOptions::new(11, 1e-6);
    opts.workers = 2;
    opts.ledger = Some(ledger.clone());
    opts.on_progress = Some(&progress);
    let result = exhaustive(&opts).expect("search");
    print!("{}", report(&result).to_text());
    println!("ledger: {}", ledger.display());
}
