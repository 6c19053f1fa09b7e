//! Exact optimum of the seven-step annotation `1100100` at c = 8/5, printed
//! line by line. The output is the stored golden derivation.

use altproof::annotation::Annotation;
use altproof::derivation::{pretty_print, verify_proof};
use altproof::lp_model::{build_lp, extract_proof};
use altproof::lp_solver::{solve, SolverConfig};
use altproof::ratio;

fn main() {
    let a: Annotation = "1100100".parse().expect("valid annotation");
    let c = ratio::frac(8, 5);
    let lp = build_lp(&a, &c).expect("model builds");
    let sol = solve(&lp, &SolverConfig::exact()).expect("exact solve");
    assert!(sol.is_feasible(), "feasible at 8/5");
    let values = sol.values.to_rationals(1);
    let proof = extract_proof(&a, &c, &lp, &values, &ratio::frac(1, 1_000_000_000)).expect("proof extracts");
    assert!(verify_proof(&proof).is_valid());
    print!("{}", pretty_print(&proof));
}
