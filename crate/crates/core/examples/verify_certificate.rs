//! Writes a certificate, reads it back, verifies it, then shows the
//! violations reported for a tampered copy.

use altproof::derivation::{verify_proof, Proof, Verdict};
use altproof::ratio::frac;
use altproof::search::best_c;

fn main() {
    let r = best_c(&"11000".parse().expect("valid annotation"), 1e-6).expect("search");
    let json = r.certificate.to_json();
    let back = Proof::from_json(&json).expect("round trip");
    println!("certificate at c = {}: {:?}", back.c, verify_proof(&back));

    let mut forged = back.clone();
    forged.c += frac(1, 10);
    match verify_proof(&forged) {
        Verdict::Valid => println!("forged proof unexpectedly valid"),
        Verdict::Invalid(vs) => {
            println!("forged proof rejected:");
            for v in vs {
                println!("  {v}");
            }
        }
    }
}
