//! Two-phase primal simplex over a dense tableau, generic over `f64` and
//! exact rationals, preceded by an exact presolve.
//!
//! The presolve removes fixed variables (singleton equalities) and merges
//! variables tied by `v − w = 0`, which shrinks the annotation LPs to a
//! fraction of their size. Floating-point solves are checked against the
//! original constraints afterwards and retried exactly if the check fails.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{Signed, Zero};

use crate::lp_model::{LinearProgram, Relation};
use crate::ratio::{self, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PivotRule {
    /// Smallest-index entering and leaving columns. Never cycles.
    Bland,
    /// Most negative reduced cost; falls back to Bland after a run of
    /// degenerate pivots.
    #[default]
    Dantzig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Feasibility tolerance for the floating-point path.
    pub tolerance: f64,
    pub pivot_rule: PivotRule,
    /// Solve with exact rationals from the start.
    pub exact_mode: bool,
    pub max_iterations: usize,
    /// Abort an exact solve once a tableau entry needs more bits than this.
    pub max_rational_bits: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: 1e-9,
            pivot_rule: PivotRule::Dantzig,
            exact_mode: false,
            max_iterations: 100_000,
            max_rational_bits: 1 << 16,
        }
    }
}

impl SolverConfig {
    pub fn exact() -> Self {
        SolverConfig {
            exact_mode: true,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SolveError {
    #[error("iteration limit of {0} pivots reached")]
    IterationLimit(usize),
    #[error("objective is unbounded below")]
    Unbounded,
    #[error("exact arithmetic exceeded {0} bits")]
    RationalBlowup(u64),
    /// Float arithmetic broke down; callers retry exactly.
    #[error("numerically ill-conditioned tableau")]
    IllConditioned,
    #[error("constraint {0} refers to a missing column")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Feasible,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Values {
    Float(Vec<f64>),
    Exact(Vec<Rational>),
}

impl Values {
    pub fn len(&self) -> usize {
        match self {
            Values::Float(v) => v.len(),
            Values::Exact(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            Values::Float(v) => v.clone(),
            Values::Exact(v) => v.iter().map(ratio::to_f64).collect(),
        }
    }

    /// Exact values, or for a float solution the simplest rationals within
    /// `1/(2·max_den)` (see [`ratio::simplest_near`]).
    pub fn to_rationals(&self, max_den: u64) -> Vec<Rational> {
        match self {
            Values::Exact(v) => v.clone(),
            Values::Float(v) => v
                .iter()
                .map(|x| ratio::simplest_near(x.max(0.0), max_den).unwrap_or_default())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub pivots: usize,
    pub rows: usize,
    pub columns: usize,
    /// A float solve failed its residual check and was redone exactly.
    pub exact_retry: bool,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: Status,
    /// Values of all original columns; empty when infeasible.
    pub values: Values,
    pub objective: Option<f64>,
    pub stats: SolveStats,
}

impl LpSolution {
    pub fn is_feasible(&self) -> bool {
        self.status == Status::Feasible
    }
}

/// Solves `lp` to optimality.
pub fn solve(lp: &LinearProgram, cfg: &SolverConfig) -> Result<LpSolution, SolveError> {
    run(lp, cfg, true)
}

/// Only decides feasibility; the returned point is feasible but not
/// necessarily optimal.
pub fn solve_feasibility(lp: &LinearProgram, cfg: &SolverConfig) -> Result<LpSolution, SolveError> {
    run(lp, cfg, false)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointViolation {
    /// Constraint index, or `None` for a negative variable.
    pub constraint: Option<usize>,
    pub name: String,
    pub lhs: Rational,
    pub rhs: Rational,
}

impl fmt::Display for PointViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: lhs {} vs rhs {}",
            self.name,
            ratio::to_string(&self.lhs),
            ratio::to_string(&self.rhs)
        )
    }
}

/// Exact check of a point against every constraint and `v ≥ 0`.
pub fn check_point(lp: &LinearProgram, values: &[Rational]) -> Result<(), Box<PointViolation>> {
    if let Some((j, v)) = values.iter().enumerate().find(|(_, v)| v.is_negative()) {
        return Err(Box::new(PointViolation {
            constraint: None,
            name: format!("{} >= 0", lp.vars.get(j).map(|k| k.to_string()).unwrap_or_default()),
            lhs: v.clone(),
            rhs: Rational::zero(),
        }));
    }
    for (i, con) in lp.constraints.iter().enumerate() {
        let lhs = con.lhs(values);
        if !con.relation.holds(&lhs, &con.rhs) {
            return Err(Box::new(PointViolation {
                constraint: Some(i),
                name: con.name.clone(),
                lhs,
                rhs: con.rhs.clone(),
            }));
        }
    }
    Ok(())
}

fn run(lp: &LinearProgram, cfg: &SolverConfig, optimize: bool) -> Result<LpSolution, SolveError> {
    let n = lp.num_vars();
    for con in &lp.constraints {
        if con.terms.iter().any(|(j, _)| *j >= n) {
            return Err(SolveError::Malformed(con.name.clone()));
        }
    }
    let reduced = match presolve(lp) {
        Some(r) => r,
        None => return Ok(infeasible(SolveStats::default())),
    };
    let mut stats = SolveStats {
        rows: reduced.rows.len(),
        columns: reduced.ncols,
        ..SolveStats::default()
    };
    if !cfg.exact_mode {
        match simplex::<f64>(&reduced, cfg, optimize, &mut stats) {
            Err(SolveError::IllConditioned) => stats.exact_retry = true,
            Err(e) => return Err(e),
            Ok(None) => return Ok(infeasible(stats)),
            Ok(Some(cols)) => {
                let values = reduced.expand_f64(&cols);
                if residual_ok(lp, &values, cfg.tolerance.max(1e-9) * 1e3) {
                    let objective = Some(objective_f64(lp, &values));
                    return Ok(LpSolution {
                        status: Status::Feasible,
                        values: Values::Float(values),
                        objective,
                        stats,
                    });
                }
                stats.exact_retry = true;
            }
        }
    }
    stats.exact = true;
    match simplex::<Rational>(&reduced, cfg, optimize, &mut stats)? {
        None => Ok(infeasible(stats)),
        Some(cols) => {
            let values = reduced.expand_exact(&cols);
            let objective = lp
                .objective
                .iter()
                .zip(&values)
                .fold(Rational::zero(), |acc, (c, v)| acc + c * v);
            Ok(LpSolution {
                status: Status::Feasible,
                values: Values::Exact(values),
                objective: Some(ratio::to_f64(&objective)),
                stats,
            })
        }
    }
}

fn infeasible(stats: SolveStats) -> LpSolution {
    LpSolution {
        status: Status::Infeasible,
        values: Values::Exact(Vec::new()),
        objective: None,
        stats,
    }
}

fn objective_f64(lp: &LinearProgram, v: &[f64]) -> f64 {
    lp.objective.iter().zip(v).map(|(c, x)| ratio::to_f64(c) * x).sum()
}

fn residual_ok(lp: &LinearProgram, v: &[f64], tol: f64) -> bool {
    if v.iter().any(|x| !x.is_finite() || *x < -tol) {
        return false;
    }
    lp.constraints.iter().all(|con| {
        let mut lhs = 0.0;
        let mut scale = 1.0f64;
        for (j, a) in &con.terms {
            let t = ratio::to_f64(a) * v[*j];
            scale = scale.max(t.abs());
            lhs += t;
        }
        let rhs = ratio::to_f64(&con.rhs);
        let slack = tol * scale.max(rhs.abs());
        match con.relation {
            Relation::Le => lhs <= rhs + slack,
            Relation::Ge => lhs >= rhs - slack,
            Relation::Eq => (lhs - rhs).abs() <= slack,
        }
    })
}

// ---------------------------------------------------------------------------
// Presolve

#[derive(Debug, Clone)]
enum Fate {
    Fixed(Rational),
    Column(usize),
}

type SparseRow = (Vec<(usize, Rational)>, Relation, Rational);

#[derive(Debug)]
struct Reduced {
    ncols: usize,
    rows: Vec<SparseRow>,
    objective: Vec<Rational>,
    fate: Vec<Fate>,
}

impl Reduced {
    fn expand_f64(&self, cols: &[f64]) -> Vec<f64> {
        self.fate
            .iter()
            .map(|f| match f {
                Fate::Fixed(v) => ratio::to_f64(v),
                Fate::Column(j) => cols[*j].max(0.0),
            })
            .collect()
    }

    fn expand_exact(&self, cols: &[Rational]) -> Vec<Rational> {
        self.fate
            .iter()
            .map(|f| match f {
                Fate::Fixed(v) => v.clone(),
                Fate::Column(j) => cols[*j].clone(),
            })
            .collect()
    }
}

struct Classes {
    parent: Vec<usize>,
    fixed: Vec<Option<Rational>>,
}

impl Classes {
    fn find(&mut self, v: usize) -> usize {
        let mut r = v;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut v = v;
        while self.parent[v] != r {
            let next = self.parent[v];
            self.parent[v] = r;
            v = next;
        }
        r
    }

    /// Returns false on a conflict.
    fn fix(&mut self, v: usize, value: Rational) -> bool {
        let r = self.find(v);
        match &self.fixed[r] {
            Some(old) => *old == value,
            None => {
                self.fixed[r] = Some(value);
                true
            }
        }
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return true;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        match self.fixed[hi].take() {
            Some(v) => self.fix(lo, v),
            None => true,
        }
    }
}

/// Rewrites a row in terms of class representatives, folding fixed values
/// into the right-hand side.
fn normalize(cls: &mut Classes, terms: &[(usize, Rational)], rhs: &Rational) -> (Vec<(usize, Rational)>, Rational) {
    let mut rhs = rhs.clone();
    let mut acc: Vec<(usize, Rational)> = Vec::with_capacity(terms.len());
    for (j, a) in terms {
        let r = cls.find(*j);
        if let Some(v) = &cls.fixed[r] {
            rhs -= a * v;
            continue;
        }
        match acc.iter_mut().find(|(k, _)| *k == r) {
            Some((_, c)) => *c += a,
            None => acc.push((r, a.clone())),
        }
    }
    acc.retain(|(_, a)| !a.is_zero());
    acc.sort_by_key(|(j, _)| *j);
    (acc, rhs)
}

fn presolve(lp: &LinearProgram) -> Option<Reduced> {
    let n = lp.num_vars();
    let mut cls = Classes {
        parent: (0..n).collect(),
        fixed: vec![None; n],
    };
    let mut done = vec![false; lp.constraints.len()];
    loop {
        let mut changed = false;
        for (i, con) in lp.constraints.iter().enumerate() {
            if done[i] {
                continue;
            }
            let (terms, rhs) = normalize(&mut cls, &con.terms, &con.rhs);
            if terms.is_empty() {
                if !con.relation.holds(&Rational::zero(), &rhs) {
                    return None;
                }
                done[i] = true;
                continue;
            }
            if con.relation != Relation::Eq {
                continue;
            }
            if terms.len() == 1 {
                let v = &rhs / &terms[0].1;
                if v.is_negative() || !cls.fix(terms[0].0, v) {
                    return None;
                }
                done[i] = true;
                changed = true;
            } else if terms.len() == 2 && rhs.is_zero() && terms[0].1 == -terms[1].1.clone() {
                if !cls.union(terms[0].0, terms[1].0) {
                    return None;
                }
                done[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let mut fate = Vec::with_capacity(n);
    let mut col_of_root = vec![usize::MAX; n];
    let mut ncols = 0;
    for v in 0..n {
        let r = cls.find(v);
        if let Some(val) = &cls.fixed[r] {
            fate.push(Fate::Fixed(val.clone()));
        } else {
            if col_of_root[r] == usize::MAX {
                col_of_root[r] = ncols;
                ncols += 1;
            }
            fate.push(Fate::Column(col_of_root[r]));
        }
    }
    let mut objective = vec![Rational::zero(); ncols];
    for (v, c) in lp.objective.iter().enumerate() {
        if let Fate::Column(j) = fate[v] {
            objective[j] += c;
        }
    }
    let mut rows = Vec::new();
    for (i, con) in lp.constraints.iter().enumerate() {
        if done[i] {
            continue;
        }
        let (terms, rhs) = normalize(&mut cls, &con.terms, &con.rhs);
        if terms.is_empty() {
            if !con.relation.holds(&Rational::zero(), &rhs) {
                return None;
            }
            continue;
        }
        let terms = terms.into_iter().map(|(r, a)| (col_of_root[r], a)).collect();
        rows.push((terms, con.relation, rhs));
    }
    Some(Reduced {
        ncols,
        rows,
        objective,
        fate,
    })
}

// ---------------------------------------------------------------------------
// Simplex

trait Field: fmt::Debug +
    Clone
    + PartialOrd
    + Zero
    + Neg<Output = Self>
    + for<'a> Add<&'a Self, Output = Self>
    + for<'a> Sub<&'a Self, Output = Self>
    + for<'a> Mul<&'a Self, Output = Self>
    + for<'a> Div<&'a Self, Output = Self>
{
    fn from_rational(r: &Rational) -> Self;
    /// Magnitudes at or below this are treated as zero.
    fn eps() -> Self;
    fn bits(&self) -> u64;
    /// Snaps round-off to zero; identity for exact values.
    fn clean(self) -> Self;
    fn magnitude(&self) -> f64;
    const EXACT: bool;
}

impl Field for f64 {
    fn from_rational(r: &Rational) -> Self {
        ratio::to_f64(r)
    }
    fn eps() -> Self {
        1e-7
    }
    fn bits(&self) -> u64 {
        0
    }
    fn clean(self) -> Self {
        if self.abs() < 1e-12 {
            0.0
        } else {
            self
        }
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    const EXACT: bool = false;
}

impl Field for Rational {
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn eps() -> Self {
        Rational::zero()
    }
    fn bits(&self) -> u64 {
        self.numer().bits().max(self.denom().bits())
    }
    fn clean(self) -> Self {
        self
    }
    fn magnitude(&self) -> f64 {
        ratio::to_f64(self).abs()
    }
    const EXACT: bool = true;
}

struct Tableau<T> {
    rows: Vec<Vec<T>>,
    rhs: Vec<T>,
    /// Reduced costs; `obj_rhs` holds `−z`.
    obj: Vec<T>,
    obj_rhs: T,
    basis: Vec<usize>,
    /// Columns that may not enter (artificials in phase 2).
    banned: Vec<bool>,
    max_bits: u64,
}

impl<T: Field> Tableau<T> {
    fn pivot(&mut self, r: usize, s: usize) -> Result<(), SolveError> {
        let piv = self.rows[r][s].clone();
        let nz: Vec<usize> = (0..self.rows[r].len()).filter(|&j| !self.rows[r][j].is_zero()).collect();
        for &j in &nz {
            self.rows[r][j] = self.rows[r][j].clone() / &piv;
        }
        self.rhs[r] = self.rhs[r].clone() / &piv;
        let prow = std::mem::take(&mut self.rows[r]);
        let prhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][s].is_zero() {
                continue;
            }
            let f = self.rows[i][s].clone();
            for &j in &nz {
                let v = self.rows[i][j].clone() - &(f.clone() * &prow[j]);
                self.rows[i][j] = v.clean();
            }
            self.rows[i][s] = T::zero();
            self.rhs[i] = (self.rhs[i].clone() - &(f * &prhs)).clean();
        }
        if !self.obj[s].is_zero() {
            let f = self.obj[s].clone();
            for &j in &nz {
                self.obj[j] = (self.obj[j].clone() - &(f.clone() * &prow[j])).clean();
            }
            self.obj[s] = T::zero();
            self.obj_rhs = self.obj_rhs.clone() - &(f * &prhs);
        }
        if T::EXACT {
            let worst = prow.iter().chain(&self.rhs).map(T::bits).max().unwrap_or(0);
            if worst > self.max_bits {
                return Err(SolveError::RationalBlowup(self.max_bits));
            }
        }
        self.rows[r] = prow;
        self.basis[r] = s;
        Ok(())
    }

    /// Recomputes the tableau for the current basis from the original rows
    /// by Gauss-Jordan elimination with partial pivoting, discarding the
    /// round-off accumulated over many pivots, and rebuilds the objective
    /// row for `cost`.
    fn refactor(&mut self, orig: &[Vec<T>], orig_rhs: &[T], cost: &[T]) -> Result<(), SolveError> {
        let m = orig.len();
        let mut rows = orig.to_vec();
        let mut rhs = orig_rhs.to_vec();
        let mut used = vec![false; m];
        let mut basis = vec![usize::MAX; m];
        for &col in &self.basis {
            let p = (0..m)
                .filter(|&i| !used[i])
                .max_by(|&i, &k| rows[i][col].magnitude().total_cmp(&rows[k][col].magnitude()))
                .ok_or(SolveError::IllConditioned)?;
            if rows[p][col].magnitude() < 1e-11 {
                return Err(SolveError::IllConditioned);
            }
            used[p] = true;
            basis[p] = col;
            let piv = rows[p][col].clone();
            let nz: Vec<usize> = (0..rows[p].len()).filter(|&j| !rows[p][j].is_zero()).collect();
            for &j in &nz {
                rows[p][j] = rows[p][j].clone() / &piv;
            }
            rhs[p] = rhs[p].clone() / &piv;
            for i in 0..m {
                if i == p || rows[i][col].is_zero() {
                    continue;
                }
                let f = rows[i][col].clone();
                for &j in &nz {
                    rows[i][j] = (rows[i][j].clone() - &(f.clone() * &rows[p][j])).clean();
                }
                rows[i][col] = T::zero();
                rhs[i] = (rhs[i].clone() - &(f * &rhs[p])).clean();
            }
        }
        self.rows = rows;
        self.rhs = rhs;
        self.basis = basis;
        self.set_cost(cost);
        Ok(())
    }

    fn set_cost(&mut self, cost: &[T]) {
        self.obj = cost.to_vec();
        self.obj_rhs = T::zero();
        for i in 0..self.rows.len() {
            let cb = &cost[self.basis[i]];
            if cb.is_zero() {
                continue;
            }
            for j in 0..self.obj.len() {
                if !self.rows[i][j].is_zero() {
                    self.obj[j] = (self.obj[j].clone() - &(cb.clone() * &self.rows[i][j])).clean();
                }
            }
            self.obj_rhs = self.obj_rhs.clone() - &(cb.clone() * &self.rhs[i]);
        }
    }

    /// Recomputes the basic solution and reduced costs for the current basis
    /// from the original rows (dense LU of the basis matrix). Returns the
    /// accurate objective value, or `None` if the basis is not optimal for
    /// `cost` or the basis matrix is numerically singular.
    fn check_basis(&self, orig: &[Vec<T>], orig_rhs: &[T], cost: &[T]) -> Option<(T, Vec<T>)> {
        let m = orig.len();
        // lu[i][k] = B[i][k] = orig[i][basis[k]]
        let mut lu: Vec<Vec<T>> = (0..m).map(|i| self.basis.iter().map(|&col| orig[i][col].clone()).collect()).collect();
        let mut perm: Vec<usize> = (0..m).collect();
        for k in 0..m {
            let p = (k..m).max_by(|&i, &j| lu[i][k].magnitude().total_cmp(&lu[j][k].magnitude()))?;
            if lu[p][k].magnitude() < 1e-11 {
                return None;
            }
            lu.swap(k, p);
            perm.swap(k, p);
            let piv = lu[k][k].clone();
            for i in k + 1..m {
                if lu[i][k].is_zero() {
                    continue;
                }
                let f = lu[i][k].clone() / &piv;
                let (upper, lower) = lu.split_at_mut(i);
                for (dst, src) in lower[0][k + 1..m].iter_mut().zip(&upper[k][k + 1..m]) {
                    if !src.is_zero() {
                        *dst = dst.clone() - &(f.clone() * src);
                    }
                }
                lu[i][k] = f;
            }
        }
        // B x = b: forward with L (unit), back with U.
        let mut x: Vec<T> = perm.iter().map(|&i| orig_rhs[i].clone()).collect();
        for i in 0..m {
            for k in 0..i {
                if !lu[i][k].is_zero() {
                    x[i] = x[i].clone() - &(lu[i][k].clone() * &x[k]);
                }
            }
        }
        for i in (0..m).rev() {
            for k in i + 1..m {
                if !lu[i][k].is_zero() {
                    x[i] = x[i].clone() - &(lu[i][k].clone() * &x[k]);
                }
            }
            x[i] = x[i].clone() / &lu[i][i];
        }
        // Bᵀ y = c_B: forward with Uᵀ, back with Lᵀ, then undo the row permutation.
        let mut z: Vec<T> = self.basis.iter().map(|&col| cost[col].clone()).collect();
        for i in 0..m {
            for k in 0..i {
                if !lu[k][i].is_zero() {
                    z[i] = z[i].clone() - &(lu[k][i].clone() * &z[k]);
                }
            }
            z[i] = z[i].clone() / &lu[i][i];
        }
        for i in (0..m).rev() {
            for k in i + 1..m {
                if !lu[k][i].is_zero() {
                    z[i] = z[i].clone() - &(lu[k][i].clone() * &z[k]);
                }
            }
        }
        let mut y = vec![T::zero(); m];
        for (k, &row) in perm.iter().enumerate() {
            y[row] = z[k].clone();
        }
        let scale = x.iter().map(T::magnitude).fold(1.0, f64::max);
        if x.iter().any(|v| v.magnitude() > 1e-9 * scale && *v < T::zero()) {
            return None;
        }
        for j in 0..cost.len() {
            if self.banned[j] {
                continue;
            }
            let mut d = cost[j].clone();
            for i in 0..m {
                if !orig[i][j].is_zero() && !y[i].is_zero() {
                    d = d - &(y[i].clone() * &orig[i][j]);
                }
            }
            if d < -T::eps() {
                return None;
            }
        }
        let value = self.basis.iter().zip(&x).fold(T::zero(), |acc, (&col, v)| acc + &(cost[col].clone() * v));
        Some((value, x))
    }

    fn has_entering(&self) -> bool {
        let neg_eps = -T::eps();
        (0..self.obj.len()).any(|j| !self.banned[j] && self.obj[j] < neg_eps)
    }

    /// Runs simplex iterations on the current objective row.
    fn optimize(&mut self, cfg: &SolverConfig, stats: &mut SolveStats) -> Result<(), SolveError> {
        let eps = T::eps();
        let neg_eps = -eps.clone();
        let mut stalled = 0usize;
        let mut best = self.obj_rhs.clone();
        let mut bland = cfg.pivot_rule == PivotRule::Bland;
        loop {
            let candidates = (0..self.obj.len()).filter(|&j| !self.banned[j] && self.obj[j] < neg_eps);
            let entering = if bland {
                candidates.into_iter().next()
            } else {
                candidates.fold(None, |best: Option<usize>, j| match best {
                    Some(b) if self.obj[b] <= self.obj[j] => Some(b),
                    _ => Some(j),
                })
            };
            let Some(s) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, T)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][s];
                if *a <= eps {
                    continue;
                }
                let ratio = self.rhs[i].clone() / a;
                let better = match &leave {
                    None => true,
                    Some((r, best)) => {
                        if ratio < best.clone() - &eps {
                            true
                        } else if ratio <= best.clone() + &eps {
                            // Ties: Bland takes the smallest basic index,
                            // Dantzig the larger pivot.
                            if bland {
                                self.basis[i] < self.basis[*r]
                            } else {
                                *a > self.rows[*r][s]
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((r, _)) = leave else {
                return Err(SolveError::Unbounded);
            };
            if stats.pivots >= cfg.max_iterations {
                return Err(SolveError::IterationLimit(cfg.max_iterations));
            }
            self.pivot(r, s)?;
            stats.pivots += 1;
            // `obj_rhs` is −z and grows as the objective improves; a stall
            // switches the pivot rule to Bland.
            if self.obj_rhs > best.clone() + &eps {
                best = self.obj_rhs.clone();
                stalled = 0;
            } else {
                stalled += 1;
                if stalled > 50 {
                    bland = true;
                }
            }
        }
    }
}

/// Column values of the reduced problem, or `None` if infeasible.
fn simplex<T: Field>(p: &Reduced, cfg: &SolverConfig, optimize: bool, stats: &mut SolveStats) -> Result<Option<Vec<T>>, SolveError> {
    let n = p.ncols;
    let m = p.rows.len();
    let n_slack = p.rows.iter().filter(|(_, rel, _)| *rel != Relation::Eq).count();
    let n_art = p.rows.iter().filter(|(_, rel, rhs)| needs_artificial(*rel, rhs)).count();
    let width = n + n_slack + n_art;
    let mut t = Tableau::<T> {
        rows: Vec::with_capacity(m),
        rhs: Vec::with_capacity(m),
        obj: vec![T::zero(); width],
        obj_rhs: T::zero(),
        basis: Vec::with_capacity(m),
        banned: vec![false; width],
        max_bits: cfg.max_rational_bits,
    };
    let one = T::from_rational(&ratio::int(1));
    let (mut next_slack, mut next_art) = (n, n + n_slack);
    for (terms, rel, rhs) in &p.rows {
        // Flip to a nonnegative right-hand side; `≥ 0` rows become `≤ 0`
        // rows with a basic slack.
        let flip = rhs.is_negative() || (rhs.is_zero() && *rel == Relation::Ge);
        let sign = |v: &Rational| T::from_rational(&if flip { -v.clone() } else { v.clone() });
        let rel = match (rel, flip) {
            (Relation::Le, true) => Relation::Ge,
            (Relation::Ge, true) => Relation::Le,
            (r, _) => *r,
        };
        let mut row = vec![T::zero(); width];
        for (j, a) in terms {
            row[*j] = sign(a);
        }
        let b = sign(rhs);
        let basic = match rel {
            Relation::Le => {
                row[next_slack] = one.clone();
                next_slack += 1;
                next_slack - 1
            }
            Relation::Ge | Relation::Eq => {
                if rel == Relation::Ge {
                    row[next_slack] = -one.clone();
                    next_slack += 1;
                }
                row[next_art] = one.clone();
                next_art += 1;
                next_art - 1
            }
        };
        t.rows.push(row);
        t.rhs.push(b);
        t.basis.push(basic);
    }
    debug_assert_eq!(next_art, width);

    // Phase 1: minimise the sum of artificials.
    let art_start = n + n_slack;
    let phase1: Vec<T> = (0..width).map(|j| if j >= art_start { one.clone() } else { T::zero() }).collect();
    let (orig, orig_rhs) = (t.rows.clone(), t.rhs.clone());
    t.set_cost(&phase1);
    let mut rounds = 0;
    loop {
        match t.optimize(cfg, stats) {
            // The phase-1 objective is bounded below by zero.
            Err(SolveError::Unbounded) => return Err(SolveError::IllConditioned),
            other => other?,
        }
        if T::EXACT {
            break;
        }
        if let Some((w, _)) = t.check_basis(&orig, &orig_rhs, &phase1) {
            t.obj_rhs = -w;
            break;
        }
        t.refactor(&orig, &orig_rhs, &phase1)?;
        rounds += 1;
        if !t.has_entering() {
            break;
        }
        if rounds == 3 {
            return Err(SolveError::IllConditioned);
        }
    }
    let infeas = -t.obj_rhs.clone();
    if T::EXACT {
        if infeas > T::zero() {
            return Ok(None);
        }
    } else {
        // `w` comes from the original rows; compare it relative to the
        // basic solution's size.
        let scale = t.rhs.iter().map(T::magnitude).fold(1.0, f64::max);
        let w = infeas.magnitude() * if infeas < T::zero() { -1.0 } else { 1.0 };
        if w > cfg.tolerance * scale {
            return Ok(None);
        }
    }

    // Drive remaining artificials out of the basis; drop redundant rows.
    let eps = T::eps();
    let mut i = 0;
    while i < t.rows.len() {
        if t.basis[i] >= art_start {
            let col = (0..art_start).find(|&j| {
                let a = &t.rows[i][j];
                *a > eps || *a < -eps.clone()
            });
            match col {
                Some(j) => {
                    t.pivot(i, j)?;
                    stats.pivots += 1;
                }
                None => {
                    t.rows.remove(i);
                    t.rhs.remove(i);
                    t.basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }
    for j in art_start..width {
        t.banned[j] = true;
    }

    if optimize {
        let cost: Vec<T> = (0..width)
            .map(|j| if j < n { T::from_rational(&p.objective[j]) } else { T::zero() })
            .collect();
        t.set_cost(&cost);
        t.optimize(cfg, stats)?;
    }

    let mut x = vec![T::zero(); n];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] = t.rhs[i].clone();
        }
    }
    Ok(Some(x))
}

fn needs_artificial(rel: Relation, rhs: &Rational) -> bool {
    match rel {
        Relation::Eq => true,
        Relation::Ge => rhs.is_positive(),
        Relation::Le => rhs.is_negative(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp_model::VarKey;
    use crate::ratio::{frac, int};

    fn var(lp: &mut LinearProgram, name: &str, cost: i64) -> usize {
        lp.add_var(VarKey::Named(name.into()), int(cost))
    }

    fn both() -> [SolverConfig; 2] {
        [SolverConfig::default(), SolverConfig::exact()]
    }

    #[test]
    fn single_variable() {
        let mut lp = LinearProgram::new();
        let x = var(&mut lp, "x", 1);
        lp.add("lo", vec![(x, int(1))], Relation::Ge, int(1));
        for cfg in both() {
            let s = solve(&lp, &cfg).unwrap();
            assert!(s.is_feasible());
            assert!((s.values.to_f64()[0] - 1.0).abs() < 1e-9);
            assert!((s.objective.unwrap() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn detects_infeasibility() {
        let mut lp = LinearProgram::new();
        let x = var(&mut lp, "x", 1);
        lp.add("lo", vec![(x, int(1))], Relation::Ge, int(2));
        lp.add("hi", vec![(x, int(1))], Relation::Le, int(1));
        for cfg in both() {
            assert_eq!(solve(&lp, &cfg).unwrap().status, Status::Infeasible);
        }
        let mut lp = LinearProgram::new();
        let x = var(&mut lp, "x", 1);
        lp.add("neg", vec![(x, int(1))], Relation::Eq, int(-1));
        assert_eq!(solve(&lp, &SolverConfig::default()).unwrap().status, Status::Infeasible);
    }

    #[test]
    fn small_optimum_exact() {
        // min -x - y  s.t. x + 2y <= 4, 3x + y <= 6
        let mut lp = LinearProgram::new();
        let x = var(&mut lp, "x", -1);
        let y = var(&mut lp, "y", -1);
        lp.add("c1", vec![(x, int(1)), (y, int(2))], Relation::Le, int(4));
        lp.add("c2", vec![(x, int(3)), (y, int(1))], Relation::Le, int(6));
        for rule in [PivotRule::Bland, PivotRule::Dantzig] {
            let cfg = SolverConfig {
                pivot_rule: rule,
                ..SolverConfig::exact()
            };
            let s = solve(&lp, &cfg).unwrap();
            assert_eq!(s.values, Values::Exact(vec![frac(8, 5), frac(6, 5)]));
            check_point(&lp, &s.values.to_rationals(1)).unwrap();
        }
    }

    #[test]
    fn unbounded_is_reported() {
        let mut lp = LinearProgram::new();
        let x = var(&mut lp, "x", -1);
        let y = var(&mut lp, "y", 0);
        lp.add("c", vec![(x, int(1)), (y, int(-1))], Relation::Le, int(1));
        assert_eq!(solve(&lp, &SolverConfig::exact()), Err(SolveError::Unbounded));
        // A feasibility-only solve does not care.
        assert!(solve_feasibility(&lp, &SolverConfig::exact()).unwrap().is_feasible());
    }

    #[test]
    fn presolve_merges_and_fixes() {
        let mut lp = LinearProgram::new();
        let x = var(&mut lp, "x", 1);
        let y = var(&mut lp, "y", 1);
        let z = var(&mut lp, "z", 1);
        lp.add("tie", vec![(x, int(1)), (y, int(-1))], Relation::Eq, int(0));
        lp.add("fix", vec![(z, int(2))], Relation::Eq, int(3));
        lp.add("lo", vec![(x, int(1)), (z, int(1))], Relation::Ge, int(4));
        let r = presolve(&lp).unwrap();
        assert_eq!(r.ncols, 1);
        assert_eq!(r.rows.len(), 1);
        let s = solve(&lp, &SolverConfig::exact()).unwrap();
        assert_eq!(s.values, Values::Exact(vec![frac(5, 2), frac(5, 2), frac(3, 2)]));
        // Conflicting fixes.
        lp.add("fix2", vec![(y, int(1))], Relation::Eq, int(7));
        lp.add("fix3", vec![(x, int(1))], Relation::Eq, int(8));
        assert!(presolve(&lp).is_none());
    }

    #[test]
    fn redundant_equalities_are_dropped() {
        let mut lp = LinearProgram::new();
        let x = var(&mut lp, "x", 1);
        let y = var(&mut lp, "y", 2);
        lp.add("e1", vec![(x, int(1)), (y, int(1))], Relation::Eq, int(2));
        lp.add("e2", vec![(x, int(2)), (y, int(2))], Relation::Eq, int(4));
        for cfg in both() {
            let s = solve(&lp, &cfg).unwrap();
            assert!((s.objective.unwrap() - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn iteration_limit_is_an_error() {
        let mut lp = LinearProgram::new();
        let x = var(&mut lp, "x", -1);
        lp.add("c", vec![(x, int(1))], Relation::Le, int(5));
        let cfg = SolverConfig {
            max_iterations: 0,
            ..SolverConfig::default()
        };
        assert_eq!(solve(&lp, &cfg), Err(SolveError::IterationLimit(0)));
    }

    #[test]
    fn check_point_reports_violations() {
        let mut lp = LinearProgram::new();
        let x = var(&mut lp, "x", 1);
        lp.add("lo", vec![(x, int(1))], Relation::Ge, int(1));
        assert!(check_point(&lp, &[int(1)]).is_ok());
        let v = check_point(&lp, &[frac(1, 2)]).unwrap_err();
        assert_eq!(v.constraint, Some(0));
        assert_eq!(check_point(&lp, &[int(-1)]).unwrap_err().constraint, None);
    }
}
