//! Compares a sequence that uses Speedup Rule 2 with the best Rule 0/1-only
//! annotation of at most the same length.

use altproof::derivation::Rule::{Slowdown as D, Speedup0 as S0, Speedup1 as S1, Speedup2 as S2};
use altproof::derivation::Rule;
use altproof::lp_model::{build_lp_for_rules, LpOptions};
use altproof::lp_solver::{solve_feasibility, SolverConfig};
use altproof::ratio::{frac, Rational};
use altproof::search::best_c;

fn feasible(rules: &[Rule], c: &Rational) -> bool {
    let lp = build_lp_for_rules(rules, c, &LpOptions::default()).expect("normal-form sequence");
    solve_feasibility(&lp, &SolverConfig::default()).expect("solve").is_feasible()
}

fn main() {
    let with_two = [S0, S2, D, D, D, S1, D, D];
    let mut hi = 100;
    while hi < 200 && feasible(&with_two, &frac(hi + 1, 100)) {
        hi += 1;
    }
    println!("{with_two:?}: feasible up to c = {:.2}", hi as f64 / 100.0);
    let rival = best_c(&"1100100".parse().expect("valid annotation"), 1e-6).expect("search");
    println!("1100100 (Rule 1 only): best_c {:.6}", rival.best_c);
}
