//! Compilation of an annotation and an exponent `c` into a linear program
//! whose feasibility decides whether a proof with that annotation exists.
//!
//! Every line `i` gets `m` slots, innermost first: slot 1 is the final DTS
//! stage `(a_{i,1}, b_{i,1})`, slot `j ≥ 2` the `(j−1)`-th block counted
//! from the inside, with `b` its input constraint. Unused slots are pinned
//! to zero. Constraints are generated from the rule semantics in
//! [`crate::derivation`]: a value defined by `max{u, v}` becomes `t ≥ u,
//! t ≥ v`, everything else is an equality. All rules are monotone in their
//! inputs, so the relaxation is exact for feasibility, and minimising the
//! sum of all exponents makes every relaxed constraint tight.

use std::fmt::{self, Write as _};

use num_traits::{One, Signed, Zero};

use crate::annotation::Annotation;
use crate::derivation::{self, DerivationError, Proof, Rule};
use crate::ratio::{self, Rational};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("c must be at least 1, got {0}")]
    BadC(String),
    #[error(transparent)]
    Derivation(#[from] DerivationError),
    #[error("solution is not feasible")]
    Infeasible,
    #[error("solution has {got} values, LP has {expected} columns")]
    WrongLength { expected: usize, got: usize },
    #[error("LP was not built from a rule sequence")]
    NoLayout,
    #[error("replayed proof does not verify: {0}")]
    NotValid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    pub fn holds(self, lhs: &Rational, rhs: &Rational) -> bool {
        match self {
            Relation::Le => lhs <= rhs,
            Relation::Eq => lhs == rhs,
            Relation::Ge => lhs >= rhs,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    /// Sparse `(column, coefficient)` terms.
    pub terms: Vec<(usize, Rational)>,
    pub relation: Relation,
    pub rhs: Rational,
    pub name: String,
}

impl Constraint {
    pub fn lhs(&self, values: &[Rational]) -> Rational {
        self.terms
            .iter()
            .fold(Rational::zero(), |acc, (j, a)| acc + a * &values[*j])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum VarKey {
    /// Runtime exponent of slot `slot` (1 = DTS) on line `line`.
    A { line: usize, slot: usize },
    /// Input exponent of that slot.
    B { line: usize, slot: usize },
    /// Speedup parameter of the step producing line `line`.
    X { line: usize },
    Named(String),
}

impl fmt::Display for VarKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarKey::A { line, slot } => write!(f, "a_{line}_{slot}"),
            VarKey::B { line, slot } => write!(f, "b_{line}_{slot}"),
            VarKey::X { line } => write!(f, "x_{line}"),
            VarKey::Named(n) => f.write_str(n),
        }
    }
}

/// Column layout of an LP compiled from a rule sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub rules: Vec<Rule>,
    pub c: Rational,
    pub lines: usize,
    /// `m`: one more than the largest block count on any line.
    pub slots: usize,
    /// Column of `x` for each step (`None` for slowdowns).
    pub x_cols: Vec<Option<usize>>,
}

impl Layout {
    pub fn a(&self, line: usize, slot: usize) -> usize {
        debug_assert!(slot >= 1 && slot <= self.slots);
        2 * (line * self.slots + slot - 1)
    }

    pub fn b(&self, line: usize, slot: usize) -> usize {
        self.a(line, slot) + 1
    }

    /// Columns of the speedup parameters, in proof order.
    pub fn x_columns(&self) -> Vec<usize> {
        self.x_cols.iter().flatten().copied().collect()
    }
}

/// Minimise `objective · v` subject to `constraints`, `v ≥ 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearProgram {
    pub vars: Vec<VarKey>,
    pub constraints: Vec<Constraint>,
    pub objective: Vec<Rational>,
    pub layout: Option<Layout>,
}

impl LinearProgram {
    pub fn new() -> Self {
        LinearProgram {
            vars: Vec::new(),
            constraints: Vec::new(),
            objective: Vec::new(),
            layout: None,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn add_var(&mut self, key: VarKey, cost: Rational) -> usize {
        self.vars.push(key);
        self.objective.push(cost);
        self.vars.len() - 1
    }

    pub fn add(&mut self, name: impl Into<String>, terms: Vec<(usize, Rational)>, relation: Relation, rhs: Rational) {
        debug_assert!(terms.iter().all(|(j, _)| *j < self.vars.len()));
        self.constraints.push(Constraint {
            terms,
            relation,
            rhs,
            name: name.into(),
        });
    }

    /// Column lookup by key. Linear scan; fine for diagnostics and tests.
    pub fn column(&self, key: &VarKey) -> Option<usize> {
        self.vars.iter().position(|k| k == key)
    }
}

impl Default for LinearProgram {
    fn default() -> Self {
        Self::new()
    }
}

/// Which constraint family to emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConstraintSet {
    /// Generated from the rule definitions (the default).
    #[default]
    RuleDerived,
    /// The hand-written listing commonly used for this LP: post-speedup DTS
    /// exponents are floored at 1 (`a_{i,1} ≥ 1`, `a_{i,1} ≥ a_{i−1,1} − x_i`)
    /// and the absorbed block's input is propagated by `≥`. Kept for
    /// cross-checking against the rule-derived set.
    Floored,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LpOptions {
    pub constraints: ConstraintSet,
    /// When set, speedups must satisfy `margin ≤ x ≤ a − margin` (the open
    /// interval `(0, a)` with a fixed gap) and the proof must win by at
    /// least `margin`, so slightly perturbed parameters still replay.
    pub margin: Option<Rational>,
}

/// The LP for an annotation at exponent `c`.
pub fn build_lp(annotation: &Annotation, c: &Rational) -> Result<LinearProgram, ModelError> {
    build_lp_for_rules(&derivation::rules_of(annotation), c, &LpOptions::default())
}

pub fn build_lp_with(annotation: &Annotation, c: &Rational, opts: &LpOptions) -> Result<LinearProgram, ModelError> {
    build_lp_for_rules(&derivation::rules_of(annotation), c, opts)
}

/// The LP for an arbitrary normal-form rule sequence (Rule 2 allowed).
pub fn build_lp_for_rules(rules: &[Rule], c: &Rational, opts: &LpOptions) -> Result<LinearProgram, ModelError> {
    if c < &Rational::one() {
        return Err(ModelError::BadC(ratio::to_string(c)));
    }
    let counts = derivation::check_rule_sequence(rules)?;
    let lines = rules.len() + 1;
    let slots = counts.iter().copied().max().unwrap_or(0) + 1;

    let mut lp = LinearProgram::new();
    let one = Rational::one;
    for line in 0..lines {
        for slot in 1..=slots {
            lp.add_var(VarKey::A { line, slot }, one());
            lp.add_var(VarKey::B { line, slot }, one());
        }
    }
    let mut x_cols = Vec::with_capacity(rules.len());
    for (step, rule) in rules.iter().enumerate() {
        x_cols.push(rule.is_speedup().then(|| lp.add_var(VarKey::X { line: step + 1 }, one())));
    }
    let layout = Layout {
        rules: rules.to_vec(),
        c: c.clone(),
        lines,
        slots,
        x_cols,
    };

    let r = ratio::int;
    let (a, b) = (|l, s| layout.a(l, s), |l, s| layout.b(l, s));
    let floored = opts.constraints == ConstraintSet::Floored;

    // Pins an unused or constant slot.
    let pin = |lp: &mut LinearProgram, name: String, col: usize, v: Rational| {
        lp.add(name, vec![(col, r(1))], Relation::Eq, v);
    };
    let copy = |lp: &mut LinearProgram, name: String, to: usize, from: usize| {
        lp.add(name, vec![(to, r(1)), (from, r(-1))], Relation::Eq, Rational::zero());
    };
    // t ≥ k·u
    let at_least = |lp: &mut LinearProgram, name: String, t: usize, k: Rational, u: usize| {
        lp.add(name, vec![(t, r(1)), (u, -k)], Relation::Ge, Rational::zero());
    };
    let zero_above = |lp: &mut LinearProgram, line: usize, used: usize| {
        for s in used + 1..=slots {
            pin(lp, format!("zero_a_{line}_{s}"), a(line, s), Rational::zero());
            pin(lp, format!("zero_b_{line}_{s}"), b(line, s), Rational::zero());
        }
    };

    // First and last lines are plain DTS classes with a ≥ a′.
    let last = lines - 1;
    lp.add("initial_a", vec![(a(0, 1), r(1))], Relation::Ge, r(1));
    pin(&mut lp, "initial_b".into(), b(0, 1), r(1));
    zero_above(&mut lp, 0, 1);
    lp.add("final_a", vec![(a(last, 1), r(1))], Relation::Ge, r(1));
    lp.add("final_b", vec![(b(last, 1), r(1))], Relation::Eq, r(1));
    let slack = opts.margin.clone().unwrap_or_else(Rational::zero);
    lp.add("win", vec![(a(0, 1), r(1)), (a(last, 1), r(-1))], Relation::Ge, slack);

    for (step, &rule) in rules.iter().enumerate() {
        let i = step + 1;
        let p = i - 1;
        let k = counts[p];
        let nk = counts[i];
        match rule {
            Rule::Speedup0 | Rule::Speedup1 | Rule::Speedup2 => {
                let x = layout.x_cols[step].unwrap();
                // DTS: a − x, same input.
                if floored && rule != Rule::Speedup0 {
                    lp.add(format!("s{i}_dts_floor"), vec![(a(i, 1), r(1))], Relation::Ge, r(1));
                    lp.add(
                        format!("s{i}_dts"),
                        vec![(a(i, 1), r(1)), (a(p, 1), r(-1)), (x, r(1))],
                        Relation::Ge,
                        Rational::zero(),
                    );
                } else {
                    lp.add(
                        format!("s{i}_dts"),
                        vec![(a(i, 1), r(1)), (a(p, 1), r(-1)), (x, r(1))],
                        Relation::Eq,
                        Rational::zero(),
                    );
                }
                copy(&mut lp, format!("s{i}_dts_in"), b(i, 1), b(p, 1));
                if let Some(m) = &opts.margin {
                    lp.add(format!("s{i}_x_min"), vec![(x, r(1))], Relation::Ge, m.clone());
                    lp.add(format!("s{i}_x_max"), vec![(a(i, 1), r(1))], Relation::Ge, m.clone());
                }
                // New logarithmic block reading max{x, b_{k+1}} bits.
                pin(&mut lp, format!("s{i}_log_a"), a(i, 2), Rational::zero());
                lp.add(format!("s{i}_log_b_x"), vec![(b(i, 2), r(1)), (x, r(-1))], Relation::Ge, Rational::zero());
                at_least(&mut lp, format!("s{i}_log_b_in"), b(i, 2), r(1), b(p, 1));
                match rule {
                    Rule::Speedup1 => {
                        // The old innermost block absorbs the x-block.
                        at_least(&mut lp, format!("s{i}_blk_a_old"), a(i, 3), r(1), a(p, 2));
                        lp.add(format!("s{i}_blk_a_x"), vec![(a(i, 3), r(1)), (x, r(-1))], Relation::Ge, Rational::zero());
                        if floored {
                            at_least(&mut lp, format!("s{i}_blk_b"), b(i, 3), r(1), b(p, 2));
                        } else {
                            copy(&mut lp, format!("s{i}_blk_b"), b(i, 3), b(p, 2));
                        }
                        for s in 4..=k + 2 {
                            copy(&mut lp, format!("s{i}_shift_a_{s}"), a(i, s), a(p, s - 1));
                            copy(&mut lp, format!("s{i}_shift_b_{s}"), b(i, s), b(p, s - 1));
                        }
                    }
                    _ => {
                        // Fresh x-block reading what the DTS stage read.
                        copy(&mut lp, format!("s{i}_blk_a"), a(i, 3), x);
                        copy(&mut lp, format!("s{i}_blk_b"), b(i, 3), b(p, 1));
                        for s in 4..=k + 3 {
                            copy(&mut lp, format!("s{i}_shift_a_{s}"), a(i, s), a(p, s - 2));
                            copy(&mut lp, format!("s{i}_shift_b_{s}"), b(i, s), b(p, s - 2));
                        }
                    }
                }
                zero_above(&mut lp, i, nk + 1);
            }
            Rule::Slowdown => {
                let cc = c.clone();
                at_least(&mut lp, format!("d{i}_dts"), a(i, 1), cc.clone(), a(p, 1));
                at_least(&mut lp, format!("d{i}_blk"), a(i, 1), cc.clone(), a(p, 2));
                at_least(&mut lp, format!("d{i}_dts_in"), a(i, 1), cc.clone(), b(p, 1));
                at_least(&mut lp, format!("d{i}_blk_in"), a(i, 1), cc, b(p, 2));
                copy(&mut lp, format!("d{i}_in"), b(i, 1), b(p, 2));
                for s in 2..=k - 1 {
                    copy(&mut lp, format!("d{i}_shift_a_{s}"), a(i, s), a(p, s + 1));
                    copy(&mut lp, format!("d{i}_shift_b_{s}"), b(i, s), b(p, s + 1));
                }
                zero_above(&mut lp, i, nk + 1);
            }
        }
    }
    if rules.first() == Some(&Rule::Speedup0) {
        // The outermost block reads the original input.
        lp.add("outer_input", vec![(b(1, 3), r(1))], Relation::Eq, r(1));
    }
    lp.layout = Some(layout);
    Ok(lp)
}

/// Reads `a_{0,1}` and the speedup parameters from an LP point.
pub fn read_parameters(lp: &LinearProgram, values: &[Rational]) -> Result<(Rational, Vec<Rational>), ModelError> {
    let layout = lp.layout.as_ref().ok_or(ModelError::NoLayout)?;
    if values.len() != lp.num_vars() {
        return Err(ModelError::WrongLength {
            expected: lp.num_vars(),
            got: values.len(),
        });
    }
    let initial = values[layout.a(0, 1)].clone();
    let xs = layout.x_columns().into_iter().map(|j| values[j].clone()).collect();
    Ok((initial, xs))
}

/// Moves parameters sitting on the closed ends of `(0, a)` inward by `eps`.
/// Returns the adjusted parameters, or `None` if a step cannot be fixed
/// (the DTS exponent before it is not above `2·eps`).
pub fn nudge_parameters(rules: &[Rule], c: &Rational, initial: &Rational, xs: &[Rational], eps: &Rational) -> Option<Vec<Rational>> {
    let mut out = Vec::with_capacity(xs.len());
    let mut cls = derivation::SimpleClass::dts(initial.clone());
    let mut it = xs.iter();
    for &rule in rules {
        let x = if rule.is_speedup() {
            let mut x = it.next()?.clone();
            let upper = &cls.dts_speed;
            if upper <= &(eps * ratio::int(2)) {
                return None;
            }
            if x < *eps {
                x = eps.clone();
            }
            if x > (upper - eps) {
                x = upper - eps;
            }
            out.push(x.clone());
            Some(x)
        } else {
            None
        };
        let app = derivation::RuleApplication { rule, x };
        cls = app.apply(&cls, c, derivation::Quantifier::Exists).ok()?;
    }
    Some(out)
}

/// Replays the proof encoded by a feasible LP point and checks it.
///
/// Parameters on the boundary of their open interval are moved inward by
/// `eps` first. Fails when the nudged replay no longer verifies; callers
/// can then re-solve with [`LpOptions::margin`].
pub fn extract_proof(annotation: &Annotation, c: &Rational, lp: &LinearProgram, values: &[Rational], eps: &Rational) -> Result<Proof, ModelError> {
    let (initial, xs) = read_parameters(lp, values)?;
    let rules = derivation::rules_of(annotation);
    let xs = nudge_parameters(&rules, c, &initial, &xs, eps)
        .ok_or_else(|| ModelError::NotValid("speedup parameter cannot be moved into its open interval".into()))?;
    let proof = derivation::replay(annotation, c, &initial, &xs)?;
    match derivation::verify_proof(&proof) {
        derivation::Verdict::Valid => Ok(proof),
        derivation::Verdict::Invalid(v) => Err(ModelError::NotValid(
            v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "),
        )),
    }
}

/// The LP point described by a proof (every slot read off its lines).
/// A valid proof's point satisfies the LP of its annotation at its `c`.
pub fn point_from_proof(lp: &LinearProgram, proof: &Proof) -> Result<Vec<Rational>, ModelError> {
    let layout = lp.layout.as_ref().ok_or(ModelError::NoLayout)?;
    let mut v = vec![Rational::zero(); lp.num_vars()];
    for (i, line) in proof.lines.iter().enumerate().take(layout.lines) {
        let k = line.k();
        v[layout.a(i, 1)] = line.dts_speed.clone();
        v[layout.b(i, 1)] = line.dts_input();
        for s in 2..=k + 1 {
            if s > layout.slots {
                break;
            }
            let block = k + 2 - s;
            v[layout.a(i, s)] = line.blocks[block - 1].speed.clone();
            v[layout.b(i, s)] = line.input_of(block);
        }
    }
    for (col, x) in layout.x_columns().into_iter().zip(&proof.speedup_params) {
        v[col] = x.clone();
    }
    Ok(v)
}

fn lp_number(r: &Rational) -> String {
    // Exact when the decimal expansion terminates within 30 digits.
    let s = ratio::Decimal(r, 30).to_string();
    let back = ratio::parse(&s).ok();
    if back.as_ref() == Some(r) {
        s
    } else {
        format!("{:.17e}", ratio::to_f64(r))
    }
}

/// CPLEX-style LP text (objective, constraints, bounds) for use with
/// external solvers.
pub fn export_lp_text(lp: &LinearProgram) -> String {
    let mut s = String::new();
    if let Some(l) = &lp.layout {
        let bits: String = l
            .rules
            .iter()
            .map(|r| if r.is_speedup() { '1' } else { '0' })
            .collect();
        let _ = writeln!(s, "\\ rules {bits}, c = {}", ratio::to_string(&l.c));
    }
    let term = |coef: &Rational, name: &str, first: bool| -> String {
        let sign = if coef.is_negative() { "-" } else if first { "" } else { "+" };
        let mag = coef.abs();
        if mag.is_one() {
            format!("{sign} {name}")
        } else {
            format!("{sign} {} {name}", lp_number(&mag))
        }
    };
    s.push_str("Minimize\n obj:");
    let mut first = true;
    for (j, cst) in lp.objective.iter().enumerate() {
        if !cst.is_zero() {
            s.push(' ');
            s.push_str(term(cst, &lp.vars[j].to_string(), first).trim_start());
            first = false;
        }
    }
    if first {
        s.push_str(" 0");
    }
    s.push_str("\nSubject To\n");
    for con in &lp.constraints {
        let _ = write!(s, " {}:", con.name);
        let mut first = true;
        for (j, coef) in &con.terms {
            s.push(' ');
            s.push_str(term(coef, &lp.vars[*j].to_string(), first).trim_start());
            first = false;
        }
        let _ = writeln!(s, " {} {}", con.relation.symbol(), lp_number(&con.rhs));
    }
    s.push_str("Bounds\n");
    for v in &lp.vars {
        let _ = writeln!(s, " {v} >= 0");
    }
    s.push_str("End\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio::{int, parse};

    fn ann(s: &str) -> Annotation {
        s.parse().unwrap()
    }

    #[test]
    fn sizes_for_lipton_viglas() {
        let lp = build_lp(&ann("100"), &parse("1.4").unwrap()).unwrap();
        let layout = lp.layout.as_ref().unwrap();
        assert_eq!(layout.lines, 4);
        assert_eq!(layout.slots, 3);
        // 2·ℓ·m + #speedups
        assert_eq!(lp.num_vars(), 2 * 4 * 3 + 1);
        assert!(lp.constraints.iter().all(|c| c.terms.iter().all(|(j, _)| *j < lp.num_vars())));
        assert!(lp.objective.iter().all(|c| c.is_one()));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(build_lp(&ann("100"), &parse("0.9").unwrap()), Err(ModelError::BadC(_))));
        let bad = [Rule::Speedup1, Rule::Slowdown, Rule::Slowdown];
        assert!(build_lp_for_rules(&bad, &int(1), &LpOptions::default()).is_err());
    }

    #[test]
    fn valid_proof_is_a_feasible_point() {
        let a = ann("1100100");
        let c = parse("1.6").unwrap();
        let x1 = parse("1.28").unwrap();
        let p = derivation::replay(&a, &c, &parse("3.28").unwrap(), &[x1.clone(), int(1), x1]).unwrap();
        let lp = build_lp(&a, &c).unwrap();
        let v = point_from_proof(&lp, &p).unwrap();
        for con in &lp.constraints {
            assert!(con.relation.holds(&con.lhs(&v), &con.rhs), "{} violated", con.name);
        }
        let (initial, xs) = read_parameters(&lp, &v).unwrap();
        assert_eq!(initial, parse("3.28").unwrap());
        assert_eq!(xs, p.speedup_params);
        let again = extract_proof(&a, &c, &lp, &v, &parse("1e-9").unwrap()).unwrap();
        assert_eq!(again, p);
    }

    #[test]
    fn nudging_moves_boundary_parameters_inward() {
        let rules = derivation::rules_of(&ann("100"));
        let eps = parse("1e-9").unwrap();
        let out = nudge_parameters(&rules, &int(1), &int(2), &[int(0)], &eps).unwrap();
        assert_eq!(out, std::slice::from_ref(&eps));
        let out = nudge_parameters(&rules, &int(1), &int(2), &[int(2)], &eps).unwrap();
        assert_eq!(out, [int(2) - &eps]);
    }

    #[test]
    fn lp_text_has_sections() {
        let lp = build_lp(&ann("100"), &parse("1.4").unwrap()).unwrap();
        let text = export_lp_text(&lp);
        for section in ["Minimize", "Subject To", "Bounds", "End"] {
            assert!(text.contains(section), "missing {section}");
        }
        assert!(text.contains("d2_dts: a_2_1 - 1.4 a_1_1 >= 0"));
        assert!(text.contains("win: a_0_1 - a_3_1 >= 0"));
    }

    fn feasible(a: &str, c: &str, exact: bool) -> bool {
        let lp = build_lp(&ann(a), &parse(c).unwrap()).unwrap();
        let cfg = if exact { crate::lp_solver::SolverConfig::exact() } else { Default::default() };
        crate::lp_solver::solve(&lp, &cfg).unwrap().is_feasible()
    }

    #[test]
    fn thresholds_of_small_annotations() {
        for exact in [false, true] {
            assert!(feasible("100", "1.40", exact));
            assert!(feasible("100", "1.41", exact));
            assert!(!feasible("100", "1.42", exact));
            assert!(!feasible("100", "1.45", exact));
            assert!(feasible("1100100", "1.59", exact));
            assert!(feasible("1100100", "1.60", exact));
            assert!(!feasible("1100100", "1.61", exact));
        }
    }

    #[test]
    fn optimum_at_eight_fifths_is_the_hand_derivation() {
        let a = ann("1100100");
        let c = parse("1.6").unwrap();
        let lp = build_lp(&a, &c).unwrap();
        let sol = crate::lp_solver::solve(&lp, &crate::lp_solver::SolverConfig::exact()).unwrap();
        let v = sol.values.to_rationals(1);
        let (initial, xs) = read_parameters(&lp, &v).unwrap();
        assert_eq!(initial, parse("2048/625").unwrap());
        assert_eq!(xs, [parse("798/625").unwrap(), int(1), parse("32/25").unwrap()]);
    }
}
