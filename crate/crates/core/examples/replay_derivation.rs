//! Replays the three-step annotation `100` with hand-picked parameters and
//! checks the resulting proof.

use altproof::derivation::{pretty_print, replay, verify_proof};
use altproof::ratio::frac;

fn main() {
    let a = "100".parse().expect("valid annotation");
    let c = frac(7, 5);
    // DTS[n^2] split at x = 1: both halves land at c·1 = 7/5, then 49/25 <= 2.
    let proof = replay(&a, &c, &frac(2, 1), &[frac(1, 1)]).expect("parameters in range");
    print!("{}", pretty_print(&proof));
    println!("verdict: {:?}", verify_proof(&proof));
}
