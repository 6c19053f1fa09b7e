//! Builds the LP for `1100100` on a grid of c values and solves it both in
//! floating point and exactly.

use altproof::lp_model::build_lp;
use altproof::lp_solver::{solve_feasibility, SolverConfig};
use altproof::ratio::frac;

fn main() {
    let a = "1100100".parse().expect("valid annotation");
    for k in [150, 155, 160, 161, 165] {
        let c = frac(k, 100);
        let lp = build_lp(&a, &c).expect("model");
        let float = solve_feasibility(&lp, &SolverConfig::default()).expect("float solve");
        let exact = solve_feasibility(&lp, &SolverConfig::exact()).expect("exact solve");
        println!(
            "c = {c}: {} variables, {} constraints, float {:?} ({} pivots), exact {:?} ({} pivots)",
            lp.num_vars(),
            lp.constraints.len(),
            float.status,
            float.stats.pivots,
            exact.status,
            exact.stats.pivots
        );
    }
}
