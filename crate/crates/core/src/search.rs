//! Bisection for the best exponent of an annotation, exhaustive and family
//! searches, and the on-disk result ledger.

use std::collections::{BTreeMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::{Duration, Instant};

use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::annotation::{self, Annotation, AnnotationError};
use crate::derivation::{self, Proof};
use crate::lp_model::{self, LpOptions, ModelError};
use crate::lp_solver::{self, SolveError, SolverConfig};
use crate::ratio::{self, Rational};

#[derive(Debug, thiserror::Error)]
pub enum SearchError {
    #[error("precision must be positive and below 1, got {0}")]
    BadPrecision(f64),
    #[error("maximum length must be odd and at least 3, got {0}")]
    BadMaxLength(usize),
    #[error("annotation {0} is infeasible at c = 1")]
    InfeasibleAtLow(String),
    #[error("annotation {0} is feasible at c = 2")]
    FeasibleAtHigh(String),
    #[error("no certificate for {annotation} at c = {c}: {reason}")]
    Certificate { annotation: String, c: String, reason: String },
    #[error(transparent)]
    Solver(#[from] SolveError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Annotation(#[from] AnnotationError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("ledger {path}: {message}")]
    Ledger { path: PathBuf, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> SearchError + '_ {
    move |source| SearchError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    /// Target bracket width.
    pub precision: f64,
    pub solver: SolverConfig,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            precision: 1e-6,
            solver: SolverConfig::default(),
        }
    }
}

impl SearchConfig {
    pub fn with_precision(precision: f64) -> Self {
        SearchConfig {
            precision,
            ..Self::default()
        }
    }

    /// Stable FNV-1a fingerprint of every setting that affects results.
    pub fn hash(&self) -> String {
        let s = format!(
            "precision={:e};tol={:e};pivot={:?};exact={};iters={};bits={}",
            self.precision,
            self.solver.tolerance,
            self.solver.pivot_rule,
            self.solver.exact_mode,
            self.solver.max_iterations,
            self.solver.max_rational_bits
        );
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for byte in s.bytes() {
            h ^= u64::from(byte);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        format!("{h:016x}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bracket {
    #[serde(with = "ratio::serde_str")]
    pub feasible: Rational,
    #[serde(with = "ratio::serde_str")]
    pub infeasible: Rational,
}

impl Bracket {
    pub fn width(&self) -> Rational {
        &self.infeasible - &self.feasible
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    pub lp_solves: u64,
    pub pivots: u64,
    /// Solves redone in exact arithmetic after float trouble, plus
    /// deliberate exact solves.
    pub exact_solves: u64,
    /// Wall time; kept out of ledgers so reruns are byte-identical.
    #[serde(skip)]
    pub elapsed: Duration,
}

impl SearchStats {
    fn record(&mut self, sol: &lp_solver::LpSolution) {
        self.lp_solves += 1;
        self.pivots += sol.stats.pivots as u64;
        self.exact_solves += u64::from(sol.stats.exact);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub annotation: Annotation,
    /// Largest exponent found feasible during bisection; at least the
    /// certified `bracket.feasible` and below `bracket.infeasible`.
    pub best_c: f64,
    pub bracket: Bracket,
    /// Verified proof at `bracket.feasible`.
    pub certificate: Proof,
    pub stats: SearchStats,
}

fn feasible_at(a: &Annotation, c: &Rational, cfg: &SolverConfig, stats: &mut SearchStats) -> Result<bool, SearchError> {
    let lp = lp_model::build_lp(a, c)?;
    let sol = lp_solver::solve_feasibility(&lp, cfg)?;
    stats.record(&sol);
    Ok(sol.is_feasible())
}

/// Finds and verifies a proof for `a` at exponent `c`.
///
/// First tries floating-point solves of LPs with a margin (`10⁻⁷`, then
/// `10⁻⁹`) on the speedup intervals and the win condition, rounds the
/// parameters to nearby simple fractions and replays them exactly. If that
/// fails (the annotation is too close to its threshold), the LP is solved
/// in exact arithmetic and the optimum is replayed, with margin LPs as a
/// last resort.
pub fn certify(a: &Annotation, c: &Rational, cfg: &SolverConfig) -> Result<Proof, SearchError> {
    certify_counted(a, c, cfg, &mut SearchStats::default())
}

fn replay_checked(a: &Annotation, c: &Rational, initial: &Rational, xs: &[Rational]) -> Result<Proof, String> {
    let proof = derivation::replay(a, c, initial, xs).map_err(|e| e.to_string())?;
    match derivation::verify_proof(&proof) {
        derivation::Verdict::Valid => Ok(proof),
        derivation::Verdict::Invalid(v) => Err(v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")),
    }
}

fn certify_counted(a: &Annotation, c: &Rational, cfg: &SolverConfig, stats: &mut SearchStats) -> Result<Proof, SearchError> {
    let fail = |reason: String| SearchError::Certificate {
        annotation: a.to_string(),
        c: ratio::to_string(c),
        reason,
    };
    let mut last = String::from("LP infeasible");
    if !cfg.exact_mode {
        for margin in [ratio::frac(1, 10_000_000), ratio::frac(1, 1_000_000_000)] {
            let opts = LpOptions {
                margin: Some(margin),
                ..LpOptions::default()
            };
            let lp = lp_model::build_lp_with(a, c, &opts)?;
            let sol = match lp_solver::solve(&lp, cfg) {
                Ok(sol) => sol,
                Err(e) => {
                    last = e.to_string();
                    continue;
                }
            };
            stats.record(&sol);
            if !sol.is_feasible() {
                continue;
            }
            let values = sol.values.to_f64();
            let layout = lp.layout.as_ref().expect("rule LP has a layout");
            // Prefer the simplest parameters that still replay to a valid proof.
            for den in [1_000u64, 100_000, 10_000_000, 1_000_000_000, 1_000_000_000_000] {
                let round = |v: f64| ratio::approximate(v, den).unwrap_or_default();
                let initial = round(values[layout.a(0, 1)]);
                let xs: Vec<Rational> = layout.x_columns().into_iter().map(|j| round(values[j])).collect();
                match replay_checked(a, c, &initial, &xs) {
                    Ok(p) => return Ok(p),
                    Err(e) => last = e,
                }
            }
        }
    }
    let exact = SolverConfig {
        exact_mode: true,
        ..cfg.clone()
    };
    let eps = ratio::frac(1, 1_000_000_000);
    for margin in [None, Some(eps.clone())] {
        let opts = LpOptions {
            margin,
            ..LpOptions::default()
        };
        let lp = lp_model::build_lp_with(a, c, &opts)?;
        let sol = lp_solver::solve(&lp, &exact)?;
        stats.record(&sol);
        if !sol.is_feasible() {
            continue;
        }
        match lp_model::extract_proof(a, c, &lp, &sol.values.to_rationals(1), &eps) {
            Ok(p) => return Ok(p),
            Err(e) => last = e.to_string(),
        }
    }
    Err(fail(last))
}

/// Largest exponent (to within `precision`) for which the annotation's LP
/// is feasible, bisecting over dyadic rationals in `[1, 2]`.
///
/// Bisection runs in floating point. The final bracket is then confirmed
/// in exact arithmetic, sliding it down or up by half a precision step
/// when the float verdicts near the boundary were wrong, and the proof at
/// the feasible end is extracted and verified.
pub fn best_c(a: &Annotation, precision: f64) -> Result<SearchResult, SearchError> {
    best_c_with(a, &SearchConfig::with_precision(precision))
}

pub fn best_c_with(a: &Annotation, cfg: &SearchConfig) -> Result<SearchResult, SearchError> {
    if !(cfg.precision > 0.0 && cfg.precision < 1.0) {
        return Err(SearchError::BadPrecision(cfg.precision));
    }
    let start = Instant::now();
    let mut stats = SearchStats::default();
    let solver = &cfg.solver;
    let one = Rational::one();
    let two = ratio::int(2);
    if !feasible_at(a, &one, solver, &mut stats)? {
        return Err(SearchError::InfeasibleAtLow(a.to_string()));
    }
    if feasible_at(a, &two, solver, &mut stats)? {
        return Err(SearchError::FeasibleAtHigh(a.to_string()));
    }
    // Bisection step: a power of two at most a tenth of the precision.
    let mut step = Rational::one();
    let target = ratio::from_f64_exact(cfg.precision / 10.0).expect("finite precision");
    while step > target {
        step /= ratio::int(2);
    }
    let (mut lo, mut hi) = (one.clone(), two);
    while &hi - &lo > step {
        let mid = (&lo + &hi) / ratio::int(2);
        if feasible_at(a, &mid, solver, &mut stats)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Certificate window: half to nine tenths of the precision below the
    // infeasible end, sliding down until a proof is found.
    let precision = ratio::from_f64_exact(cfg.precision).expect("finite precision");
    let certificate = loop {
        let lo_c = (&hi - &precision * ratio::frac(9, 10)).max(one.clone());
        let hi_c = (&hi - &precision * ratio::frac(1, 2)).max(one.clone()).min(lo.clone());
        let c = ratio::simplest_between(&lo_c.clone().min(hi_c.clone()), &hi_c);
        match certify_counted(a, &c, solver, &mut stats) {
            Ok(p) => break p,
            Err(e) if c == one => return Err(e),
            Err(_) => {
                hi = c.clone();
                lo = lo.min(c);
            }
        }
    };
    stats.elapsed = start.elapsed();
    Ok(SearchResult {
        annotation: a.clone(),
        best_c: ratio::to_f64(&lo),
        bracket: Bracket {
            feasible: certificate.c.clone(),
            infeasible: hi,
        },
        certificate,
        stats,
    })
}

/// One ledger line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerRecord {
    pub annotation: Annotation,
    pub length: usize,
    pub best_c: f64,
    pub bracket: Bracket,
    /// Certificate path relative to the ledger's directory.
    pub certificate: String,
    pub stats: SearchStats,
}

impl LedgerRecord {
    pub fn from_result(r: &SearchResult, certificate: String) -> Self {
        LedgerRecord {
            annotation: r.annotation.clone(),
            length: r.annotation.len(),
            best_c: r.best_c,
            bracket: r.bracket.clone(),
            certificate,
            stats: r.stats.clone(),
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("records serialize")
    }

    fn key(&self) -> (usize, String) {
        (self.length, self.annotation.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerMeta {
    pub max_length: usize,
    pub precision: f64,
    pub config_hash: String,
}

/// Search results keyed by annotation, ordered by (length, annotation).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SearchLedger {
    pub meta: Option<LedgerMeta>,
    records: BTreeMap<(usize, String), LedgerRecord>,
}

/// Path of the metadata file that accompanies a ledger.
pub fn meta_path(ledger: &Path) -> PathBuf {
    let mut s = ledger.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Directory holding the certificates written next to a ledger.
pub fn certificate_dir(ledger: &Path) -> PathBuf {
    ledger.parent().unwrap_or(Path::new(".")).join("certificates")
}

impl SearchLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, annotation: &Annotation) -> Option<&LedgerRecord> {
        self.records.get(&(annotation.len(), annotation.to_string()))
    }

    pub fn contains(&self, annotation: &Annotation) -> bool {
        self.get(annotation).is_some()
    }

    /// Records in canonical (length, annotation) order.
    pub fn records(&self) -> impl Iterator<Item = &LedgerRecord> {
        self.records.values()
    }

    /// Adds a record. When one already exists for the annotation, the one
    /// with the smaller serialized form is kept, so merging is commutative.
    pub fn insert(&mut self, rec: LedgerRecord) {
        let key = rec.key();
        match self.records.get(&key) {
            Some(old) if old.to_line() <= rec.to_line() => {}
            _ => {
                self.records.insert(key, rec);
            }
        }
    }

    pub fn merge(&mut self, other: &SearchLedger) {
        for rec in other.records() {
            self.insert(rec.clone());
        }
        if self.meta.is_none() {
            self.meta = other.meta.clone();
        }
    }

    /// Reads a JSON-lines ledger and its metadata, if present. A truncated
    /// final line (from an interrupted write) is ignored; malformed lines
    /// elsewhere are errors.
    pub fn load(path: &Path) -> Result<Self, SearchError> {
        let mut ledger = SearchLedger::new();
        let file = File::open(path).map_err(io_err(path))?;
        let lines: Vec<String> = BufReader::new(file).lines().collect::<Result<_, _>>().map_err(io_err(path))?;
        let last = lines.iter().rposition(|l| !l.trim().is_empty());
        for (i, line) in lines.iter().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<LedgerRecord>(line) {
                Ok(rec) => ledger.insert(rec),
                Err(_) if Some(i) == last => {}
                Err(e) => {
                    return Err(SearchError::Ledger {
                        path: path.to_path_buf(),
                        message: format!("line {}: {e}", i + 1),
                    })
                }
            }
        }
        let mp = meta_path(path);
        if mp.exists() {
            let text = fs::read_to_string(&mp).map_err(io_err(&mp))?;
            ledger.meta = Some(serde_json::from_str(&text).map_err(|e| SearchError::Ledger {
                path: mp.clone(),
                message: e.to_string(),
            })?);
        }
        Ok(ledger)
    }

    /// All records, one per line, in canonical order.
    pub fn canonical_text(&self) -> String {
        let mut s = String::new();
        for rec in self.records() {
            s.push_str(&rec.to_line());
            s.push('\n');
        }
        s
    }

    /// Rewrites `path` in canonical order (atomically, via a temporary file).
    pub fn write_canonical(&self, path: &Path) -> Result<(), SearchError> {
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, self.canonical_text()).map_err(io_err(&tmp))?;
        fs::rename(&tmp, path).map_err(io_err(path))?;
        if let Some(meta) = &self.meta {
            write_meta(path, meta)?;
        }
        Ok(())
    }
}

fn write_meta(ledger: &Path, meta: &LedgerMeta) -> Result<(), SearchError> {
    let mp = meta_path(ledger);
    let text = serde_json::to_string_pretty(meta).expect("metadata serializes");
    fs::write(&mp, text + "\n").map_err(io_err(&mp))
}

fn write_certificate(dir: &Path, proof: &Proof) -> Result<String, SearchError> {
    let name = format!("{}.json", proof.annotation);
    let path = dir.join(&name);
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, proof.to_json()).map_err(io_err(&tmp))?;
    fs::rename(&tmp, &path).map_err(io_err(&path))?;
    Ok(format!("certificates/{name}"))
}

/// Progress of a running exhaustive search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Progress {
    pub done: usize,
    pub total: usize,
}

pub struct ExhaustiveOptions<'a> {
    pub max_length: usize,
    pub search: SearchConfig,
    pub workers: usize,
    /// Ledger file; results are appended as they complete and existing
    /// records are skipped. `None` keeps everything in memory.
    pub ledger: Option<PathBuf>,
    /// Prior results merged in before starting (and skipped).
    pub seed: Option<SearchLedger>,
    /// Checked between annotations; when set, workers stop and the ledger
    /// is left consistent for a later resume.
    pub stop: Option<&'a AtomicBool>,
    /// Stop after this many new results (for interruption tests).
    pub limit: Option<usize>,
    pub on_progress: Option<&'a (dyn Fn(Progress) + Sync)>,
}

impl ExhaustiveOptions<'_> {
    pub fn new(max_length: usize, precision: f64) -> Self {
        ExhaustiveOptions {
            max_length,
            search: SearchConfig::with_precision(precision),
            workers: 1,
            ledger: None,
            seed: None,
            stop: None,
            limit: None,
            on_progress: None,
        }
    }
}

/// Prefix length used to split one annotation length into work items.
fn prefix_len(length: usize) -> usize {
    length.saturating_sub(9).min(8)
}

/// Runs [`best_c_with`] on every valid annotation of every odd length from 3
/// to `max_length`, across `workers` threads.
///
/// Work is split by annotation prefix; each finished annotation is appended
/// to the ledger (if any) and flushed before the next is reported, so an
/// interrupted run resumes where it stopped.
pub fn exhaustive(opts: &ExhaustiveOptions) -> Result<SearchLedger, SearchError> {
    if opts.max_length < 3 || opts.max_length.is_multiple_of(2) {
        return Err(SearchError::BadMaxLength(opts.max_length));
    }
    let meta = LedgerMeta {
        max_length: opts.max_length,
        precision: opts.search.precision,
        config_hash: opts.search.hash(),
    };
    let mut ledger = SearchLedger::new();
    if let Some(seed) = &opts.seed {
        ledger.merge(seed);
    }
    let mut sink = None;
    if let Some(path) = &opts.ledger {
        if path.exists() {
            let prior = SearchLedger::load(path)?;
            if let Some(m) = &prior.meta {
                if m.config_hash != meta.config_hash {
                    return Err(SearchError::Ledger {
                        path: path.clone(),
                        message: format!("written with config {}, current config is {}", m.config_hash, meta.config_hash),
                    });
                }
            }
            ledger.merge(&prior);
            // Drop a partial trailing line before appending.
            ledger.write_canonical(path)?;
        }
        write_meta(path, &meta)?;
        fs::create_dir_all(certificate_dir(path)).map_err(io_err(path))?;
        let file = OpenOptions::new().create(true).append(true).open(path).map_err(io_err(path))?;
        sink = Some(file);
    }
    ledger.meta = Some(meta);

    let mut items = Vec::new();
    let mut total = 0usize;
    for length in (3..=opts.max_length).step_by(2) {
        for prefix in annotation::partitions(length, prefix_len(length))? {
            items.push((length, prefix));
        }
        total += annotation::enumerate(length)?.count();
    }
    let done: HashSet<String> = ledger.records().map(|r| r.annotation.to_string()).collect();
    let next = AtomicUsize::new(0);
    let issued = AtomicUsize::new(0);
    let halt = AtomicBool::new(false);
    let cert_dir = opts.ledger.as_deref().map(certificate_dir);
    let (tx, rx) = mpsc::channel::<Result<(SearchResult, String), SearchError>>();

    let stopped = |issued: &AtomicUsize| {
        halt.load(Ordering::Relaxed)
            || opts.stop.is_some_and(|s| s.load(Ordering::Relaxed))
            || opts.limit.is_some_and(|l| issued.load(Ordering::Relaxed) >= l)
    };

    let mut first_error = None;
    std::thread::scope(|scope| {
        for _ in 0..opts.workers.max(1) {
            let tx = tx.clone();
            let (items, done, next, issued, cert_dir) = (&items, &done, &next, &issued, &cert_dir);
            let stopped = &stopped;
            scope.spawn(move || {
                'items: loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some((length, prefix)) = items.get(i) else { break };
                    let it = match annotation::enumerate_with_prefix(*length, prefix) {
                        Ok(it) => it,
                        Err(e) => {
                            let _ = tx.send(Err(e.into()));
                            break;
                        }
                    };
                    for a in it {
                        if done.contains(&a.to_string()) {
                            continue;
                        }
                        if stopped(issued) {
                            break 'items;
                        }
                        if let Some(l) = opts.limit {
                            if issued.fetch_add(1, Ordering::Relaxed) >= l {
                                break 'items;
                            }
                        }
                        let out = best_c_with(&a, &opts.search).and_then(|r| {
                            let cert = match cert_dir {
                                Some(d) => write_certificate(d, &r.certificate)?,
                                None => format!("certificates/{}.json", r.annotation),
                            };
                            Ok((r, cert))
                        });
                        let failed = out.is_err();
                        if tx.send(out).is_err() || failed {
                            break 'items;
                        }
                    }
                }
            });
        }
        drop(tx);
        let mut count = done.len();
        for msg in rx {
            match msg {
                Ok((r, cert)) => {
                    let rec = LedgerRecord::from_result(&r, cert);
                    if let Some(f) = sink.as_mut() {
                        let line = rec.to_line() + "\n";
                        let path = opts.ledger.as_deref().unwrap();
                        if let Err(e) = f.write_all(line.as_bytes()).and_then(|_| f.flush()) {
                            first_error.get_or_insert(io_err(path)(e));
                            halt.store(true, Ordering::Relaxed);
                        }
                    }
                    ledger.insert(rec);
                    count += 1;
                    if let Some(cb) = opts.on_progress {
                        cb(Progress { done: count, total });
                    }
                }
                Err(e) => {
                    first_error.get_or_insert(e);
                    halt.store(true, Ordering::Relaxed);
                }
            }
        }
    });
    match first_error {
        Some(e) => Err(e),
        None => Ok(ledger),
    }
}

/// Parameterised annotation families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilyParams {
    /// `1^k 0^(k+1)`.
    Fvm(usize),
    W { outer: usize, inner: usize },
}

impl FamilyParams {
    pub fn annotation(self) -> Result<Annotation, AnnotationError> {
        match self {
            FamilyParams::Fvm(k) => annotation::family_fvm(k),
            FamilyParams::W { outer, inner } => annotation::family_w(outer, inner),
        }
    }

    pub fn label(self) -> String {
        match self {
            FamilyParams::Fvm(k) => format!("fvm k={k}"),
            FamilyParams::W { outer, inner } => format!("w outer={outer} inner={inner}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyPoint {
    pub params: FamilyParams,
    pub result: SearchResult,
}

/// Best exponents for a list of family members, computed on `workers`
/// threads and returned in input order.
pub fn family_sweep(params: &[FamilyParams], cfg: &SearchConfig, workers: usize) -> Result<Vec<FamilyPoint>, SearchError> {
    let anns = params.iter().map(|p| p.annotation()).collect::<Result<Vec<_>, _>>()?;
    let next = AtomicUsize::new(0);
    let mut slots: Vec<Option<Result<SearchResult, SearchError>>> = (0..anns.len()).map(|_| None).collect();
    let (tx, rx) = mpsc::channel();
    std::thread::scope(|scope| {
        for _ in 0..workers.max(1) {
            let tx = tx.clone();
            let (anns, next) = (&anns, &next);
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(a) = anns.get(i) else { break };
                if tx.send((i, best_c_with(a, cfg))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for (i, r) in rx {
            slots[i] = Some(r);
        }
    });
    params
        .iter()
        .zip(slots)
        .map(|(&p, r)| {
            Ok(FamilyPoint {
                params: p,
                result: r.expect("every item is processed")?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LengthRow {
    pub length: usize,
    pub annotations: usize,
    pub max_best_c: f64,
    pub argmax: Annotation,
    pub certificate: String,
}

/// Summary of a ledger: the best annotation per length and the records
/// that set a new overall maximum, both in (length, annotation) order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub per_length: Vec<LengthRow>,
    pub frontier: Vec<LedgerRecord>,
}

pub fn report(ledger: &SearchLedger) -> Report {
    let mut per_length: Vec<LengthRow> = Vec::new();
    let mut frontier: Vec<LedgerRecord> = Vec::new();
    for rec in ledger.records() {
        match per_length.last_mut() {
            Some(row) if row.length == rec.length => {
                row.annotations += 1;
                if rec.best_c > row.max_best_c {
                    row.max_best_c = rec.best_c;
                    row.argmax = rec.annotation.clone();
                    row.certificate = rec.certificate.clone();
                }
            }
            _ => per_length.push(LengthRow {
                length: rec.length,
                annotations: 1,
                max_best_c: rec.best_c,
                argmax: rec.annotation.clone(),
                certificate: rec.certificate.clone(),
            }),
        }
        if frontier.last().is_none_or(|f| rec.best_c > f.best_c) {
            frontier.push(rec.clone());
        }
    }
    Report { per_length, frontier }
}

impl Report {
    pub fn to_text(&self) -> String {
        if self.per_length.is_empty() {
            return String::new();
        }
        let width = self.per_length.iter().map(|r| r.argmax.len()).max().unwrap_or(0).max(10);
        let mut s = format!("{:>6}  {:>11}  {:>10}  {:<width$}  certificate\n", "length", "annotations", "best_c", "annotation");
        for r in &self.per_length {
            s += &format!(
                "{:>6}  {:>11}  {:>10.6}  {:<width$}  {}\n",
                r.length, r.annotations, r.max_best_c, r.argmax.to_string(), r.certificate
            );
        }
        s += "\nfrontier\n";
        for f in &self.frontier {
            s += &format!("{:>6}  {:>10.6}  {}\n", f.length, f.best_c, f.annotation);
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["length", "annotations", "best_c", "annotation", "certificate"])
            .expect("in-memory write");
        for r in &self.per_length {
            w.write_record([
                r.length.to_string(),
                r.annotations.to_string(),
                format!("{:.9}", r.max_best_c),
                r.argmax.to_string(),
                r.certificate.clone(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }
}
