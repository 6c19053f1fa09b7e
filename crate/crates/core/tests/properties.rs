use proptest::prelude::*;

use altproof::annotation::{self, Annotation};
use altproof::derivation::{replay, rules_of, verify_proof, Proof, Quantifier, Rule, RuleApplication, SimpleClass};
use altproof::lp_model::build_lp;
use altproof::lp_solver::{solve_feasibility, SolverConfig};
use altproof::ratio::{self, Rational};
use altproof::search::certify;

fn all_annotations(max_len: usize) -> Vec<Annotation> {
    (3..=max_len).step_by(2).flat_map(|l| annotation::enumerate(l).unwrap()).collect()
}

fn annotation_strategy(max_len: usize) -> impl Strategy<Value = Annotation> {
    let all = all_annotations(max_len);
    (0..all.len()).prop_map(move |i| all[i].clone())
}

fn feasible(a: &Annotation, c: &Rational, cfg: &SolverConfig) -> bool {
    solve_feasibility(&build_lp(a, c).unwrap(), cfg).unwrap().is_feasible()
}

#[test]
fn feasibility_is_monotone_on_the_grid() {
    let cfg = SolverConfig::default();
    for a in all_annotations(11) {
        let verdicts: Vec<bool> = (10..=19).map(|k| feasible(&a, &ratio::frac(k, 10), &cfg)).collect();
        assert!(verdicts[0], "{a} infeasible at c = 1");
        assert!(verdicts.windows(2).all(|w| w[0] || !w[1]), "{a}: {verdicts:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exact_feasibility_is_monotone(a in annotation_strategy(11), lo in 100u32..200, hi in 100u32..200) {
        let (lo, hi) = (lo.min(hi), lo.max(hi));
        let cfg = SolverConfig::exact();
        if feasible(&a, &ratio::frac(hi.into(), 100), &cfg) {
            prop_assert!(feasible(&a, &ratio::frac(lo.into(), 100), &cfg));
        }
    }

    #[test]
    fn certificates_replay_and_verify(a in annotation_strategy(11), k in 1000i64..1300) {
        let c = ratio::frac(k, 1000);
        let proof = certify(&a, &c, &SolverConfig::default()).unwrap();
        prop_assert!(verify_proof(&proof).is_valid());
        let again = replay(&a, &c, &proof.initial_speed, &proof.speedup_params).unwrap();
        prop_assert_eq!(&again, &proof);
        let back = Proof::from_json(&proof.to_json()).unwrap();
        prop_assert_eq!(back, proof);
    }

    /// Proofs built step by step from arbitrary parameters are valid exactly
    /// when they win.
    #[test]
    fn random_parameters_verify_iff_winning(
        a in annotation_strategy(11),
        c in 100i64..200,
        initial in 100i64..500,
        fractions in prop::collection::vec(1i64..100, 8),
    ) {
        let c = ratio::frac(c, 100);
        let mut lines = vec![SimpleClass::dts(ratio::frac(initial, 100))];
        let mut xs = Vec::new();
        let mut t = fractions.iter().cycle();
        for rule in rules_of(&a) {
            let cur = lines.last().unwrap();
            let app = if rule == Rule::Slowdown {
                RuleApplication::slowdown()
            } else {
                let x = &cur.dts_speed * ratio::frac(*t.next().unwrap(), 100);
                xs.push(x.clone());
                RuleApplication::speedup(rule, x)
            };
            lines.push(app.apply(cur, &c, Quantifier::Exists).unwrap());
        }
        let proof = Proof { c, initial_speed: lines[0].dts_speed.clone(), annotation: a, speedup_params: xs, lines };
        prop_assert_eq!(verify_proof(&proof).is_valid(), proof.wins());
    }

    #[test]
    fn tampering_with_a_line_is_detected(a in annotation_strategy(9), line in 1usize..9) {
        let c = ratio::frac(6, 5);
        let mut proof = certify(&a, &c, &SolverConfig::default()).unwrap();
        let line = line.min(proof.lines.len() - 1);
        proof.lines[line].dts_speed += ratio::frac(1, 7);
        prop_assert!(!verify_proof(&proof).is_valid());
    }
}
