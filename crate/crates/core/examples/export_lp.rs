//! Prints the LP of `100` at c = 7/5 in CPLEX LP format.

use altproof::lp_model::{build_lp, export_lp_text};
use altproof::ratio::frac;

fn main() {
    let lp = build_lp(&"100".parse().expect("valid annotation"), &frac(7, 5)).expect("model");
    print!("{}", export_lp_text(&lp));
}
