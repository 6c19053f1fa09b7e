//! Cross-check of the rule-derived constraint set against the hand-written
//! listing (`ConstraintSet::Floored`). Every verdict gap is reported.

use std::collections::BTreeSet;

use altproof::annotation::{self, Annotation};
use altproof::lp_model::{build_lp, build_lp_with, extract_proof, ConstraintSet, LpOptions, Relation};
use altproof::lp_solver::{solve, solve_feasibility, SolverConfig};
use altproof::ratio::{self, Rational};

fn floored() -> LpOptions {
    LpOptions {
        constraints: ConstraintSet::Floored,
        ..LpOptions::default()
    }
}

fn verdict(a: &Annotation, c: &Rational, opts: &LpOptions) -> bool {
    let lp = build_lp_with(a, c, opts).unwrap();
    solve_feasibility(&lp, &SolverConfig::exact()).unwrap().is_feasible()
}

#[test]
fn verdict_gaps_between_constraint_sets() {
    let mut gaps = Vec::new();
    let mut pairs = 0;
    for len in (3..=11).step_by(2) {
        for a in annotation::enumerate(len).unwrap() {
            for k in 10..=19 {
                let c = ratio::frac(k, 10);
                let derived = verdict(&a, &c, &LpOptions::default());
                let listing = verdict(&a, &c, &floored());
                pairs += 1;
                if derived != listing {
                    gaps.push(format!("{a} at {c}: rule-derived {derived}, listing {listing}"));
                }
            }
        }
    }
    println!("{pairs} pairs, {} verdict gaps", gaps.len());
    for g in &gaps {
        println!("  {g}");
    }
}

/// The listing's optimum replays into a valid proof wherever it is feasible;
/// points that do not are reported.
#[test]
fn listing_points_replay() {
    let eps = ratio::frac(1, 1_000_000_000);
    let mut unreplayable = Vec::new();
    for len in (3..=9).step_by(2) {
        for a in annotation::enumerate(len).unwrap() {
            for k in 10..=19 {
                let c = ratio::frac(k, 10);
                let lp = build_lp_with(&a, &c, &floored()).unwrap();
                let sol = solve(&lp, &SolverConfig::exact()).unwrap();
                if !sol.is_feasible() {
                    continue;
                }
                if let Err(e) = extract_proof(&a, &c, &lp, &sol.values.to_rationals(1), &eps) {
                    unreplayable.push(format!("{a} at {c}: {e}"));
                }
            }
        }
    }
    println!("{} listing optima without a replayable proof", unreplayable.len());
    for u in &unreplayable {
        println!("  {u}");
    }
}

/// Row-by-row difference between the two sets: each Rule 1 step `i` gets a
/// floor row `s{i}_dts_floor`, and its DTS step and absorbed-block input
/// rows relax from `=` to `>=`. Nothing else differs.
#[test]
fn structural_divergences_are_exactly_the_documented_ones() {
    let c = ratio::frac(3, 2);
    for len in (3..=9).step_by(2) {
        for a in annotation::enumerate(len).unwrap() {
            let derived = build_lp(&a, &c).unwrap();
            let listing = build_lp_with(&a, &c, &floored()).unwrap();
            let rule_one_steps: Vec<usize> = altproof::derivation::rules_of(&a)
                .iter()
                .enumerate()
                .filter(|(_, r)| **r == altproof::derivation::Rule::Speedup1)
                .map(|(i, _)| i + 1)
                .collect();
            let mut expect_only_listing = BTreeSet::new();
            let mut expect_relaxed = BTreeSet::new();
            for i in &rule_one_steps {
                expect_only_listing.insert(format!("s{i}_dts_floor"));
                expect_relaxed.insert(format!("s{i}_dts"));
                expect_relaxed.insert(format!("s{i}_blk_b"));
            }
            let mut only_listing = BTreeSet::new();
            let mut relaxed = BTreeSet::new();
            for row in &listing.constraints {
                match derived.constraints.iter().find(|d| d.name == row.name) {
                    None => {
                        only_listing.insert(row.name.clone());
                    }
                    Some(d) if d != row => {
                        assert_eq!(d.terms, row.terms, "{a}: {}", row.name);
                        assert_eq!(d.relation, Relation::Eq, "{a}: {}", row.name);
                        assert_eq!(row.relation, Relation::Ge, "{a}: {}", row.name);
                        relaxed.insert(row.name.clone());
                    }
                    _ => {}
                }
            }
            let names: BTreeSet<_> = listing.constraints.iter().map(|r| &r.name).collect();
            assert!(derived.constraints.iter().all(|r| names.contains(&r.name)), "{a}");
            assert_eq!(only_listing, expect_only_listing, "{a}");
            assert_eq!(relaxed, expect_relaxed, "{a}");
        }
    }
}
