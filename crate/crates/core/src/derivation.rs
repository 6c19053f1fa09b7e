//! Exact symbolic engine for simple alternating classes.
//!
//! A [`SimpleClass`] is one proof line,
//! `(Q_1 n^{a_1})^{b_2} (Q_2 n^{a_2})^{b_3} … (Q_k n^{a_k})^{b_{k+1}} DTS[n^{a_{k+1}}]`.
//! Each [`QuantifierBlock`] stores its runtime exponent `a_i` and the input
//! constraint written after it (`b_{i+1}`, the number of bits handed to the
//! next stage). The outermost block always reads the original input, so
//! `b_1 = 1`.
//!
//! Every exponent is an exact rational; o(1) terms are dropped and the
//! logarithmic quantifier created by a speedup is written `n^0`.

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::annotation::{Annotation, AnnotationError};
use crate::ratio::{self, Rational};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DerivationError {
    #[error("speedup rule 0 needs a plain DTS class, got {0} quantifier blocks")]
    NotPlainDts(usize),
    #[error("rule needs at least one quantifier block")]
    NoBlocks,
    #[error("speedup parameter x = {x} outside the open interval (0, {upper})")]
    SpeedupOutOfRange { x: String, upper: String },
    #[error("slowdown needs c >= 1, got {0}")]
    BadC(String),
    #[error("initial exponent must be at least 1, got {0}")]
    BadInitial(String),
    #[error("annotation has {expected} speedups but {got} parameters were supplied")]
    ParamCount { expected: usize, got: usize },
    #[error("invalid annotation: {0}")]
    Annotation(#[from] AnnotationError),
    #[error("invalid class: {0}")]
    InvalidClass(String),
    #[error("rule sequence is not in normal form: {0}")]
    NotNormalForm(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quantifier {
    #[serde(rename = "E")]
    Exists,
    #[serde(rename = "A")]
    Forall,
}

impl Quantifier {
    pub fn opposite(self) -> Self {
        match self {
            Quantifier::Exists => Quantifier::Forall,
            Quantifier::Forall => Quantifier::Exists,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Quantifier::Exists => "∃",
            Quantifier::Forall => "∀",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuantifierBlock {
    pub kind: Quantifier,
    /// Runtime exponent of the guessing stage, measured against the original
    /// input length.
    #[serde(with = "ratio::serde_str")]
    pub speed: Rational,
    /// Input constraint written after the block.
    #[serde(with = "ratio::serde_str")]
    pub input: Rational,
}

impl QuantifierBlock {
    pub fn new(kind: Quantifier, speed: Rational, input: Rational) -> Self {
        QuantifierBlock { kind, speed, input }
    }

    /// Block with the default input constraint `max{a, 1}`.
    pub fn with_default_input(kind: Quantifier, speed: Rational) -> Self {
        let input = ratio::max(&speed, &Rational::one()).clone();
        QuantifierBlock { kind, speed, input }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SimpleClass {
    /// Outermost first.
    pub blocks: Vec<QuantifierBlock>,
    #[serde(rename = "dts", with = "ratio::serde_str")]
    pub dts_speed: Rational,
}

impl SimpleClass {
    pub fn dts(speed: Rational) -> Self {
        SimpleClass {
            blocks: Vec::new(),
            dts_speed: speed,
        }
    }

    pub fn new(blocks: Vec<QuantifierBlock>, dts_speed: Rational) -> Result<Self, DerivationError> {
        let cls = SimpleClass { blocks, dts_speed };
        cls.check()?;
        Ok(cls)
    }

    /// Range checks shared by every class: `a ≥ 0`, `b ≥ 1`.
    pub fn check(&self) -> Result<(), DerivationError> {
        if self.dts_speed.is_negative() {
            return Err(DerivationError::InvalidClass(format!(
                "negative DTS exponent {}",
                ratio::to_string(&self.dts_speed)
            )));
        }
        for (i, b) in self.blocks.iter().enumerate() {
            if b.speed.is_negative() {
                return Err(DerivationError::InvalidClass(format!("block {} has negative speed", i + 1)));
            }
            if b.input < Rational::one() {
                return Err(DerivationError::InvalidClass(format!("block {} has input below 1", i + 1)));
            }
        }
        Ok(())
    }

    pub fn is_dts(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn k(&self) -> usize {
        self.blocks.len()
    }

    /// Input constraint of the final DTS stage (`b_{k+1}`); 1 for a plain
    /// DTS class.
    pub fn dts_input(&self) -> Rational {
        self.blocks.last().map_or_else(Rational::one, |b| b.input.clone())
    }

    /// Input constraint of block `i` (1-indexed), i.e. the superscript written
    /// before it. `b_1 = 1`.
    pub fn input_of(&self, i: usize) -> Rational {
        if i <= 1 {
            Rational::one()
        } else {
            self.blocks[i - 2].input.clone()
        }
    }

    pub fn is_alternating(&self) -> bool {
        self.blocks.windows(2).all(|w| w[0].kind != w[1].kind)
    }
}

fn check_x(x: &Rational, upper: &Rational) -> Result<(), DerivationError> {
    if x.is_positive() && x < upper {
        Ok(())
    } else {
        Err(DerivationError::SpeedupOutOfRange {
            x: ratio::to_string(x),
            upper: ratio::to_string(upper),
        })
    }
}

/// Speedup Rule 0: `DTS[n^a] ⊆ (Q_0 n^x)^{max{x,1}} (Q_1 n^0)^1 DTS[n^{a−x}]`.
pub fn apply_speedup0(cls: &SimpleClass, x: &Rational, outer: Quantifier) -> Result<SimpleClass, DerivationError> {
    if !cls.is_dts() {
        return Err(DerivationError::NotPlainDts(cls.k()));
    }
    check_x(x, &cls.dts_speed)?;
    let one = Rational::one();
    Ok(SimpleClass {
        blocks: vec![
            QuantifierBlock::new(outer, x.clone(), ratio::max(x, &one).clone()),
            QuantifierBlock::new(outer.opposite(), Rational::zero(), one),
        ],
        dts_speed: &cls.dts_speed - x,
    })
}

/// Speedup Rule 1: the innermost block absorbs the guessed configurations,
/// `(Q_k n^{a_k})^{b} DTS[n^a] ⊆ (Q_k n^{max{a_k,x}})^{max{x,b}} (Q_{k+1} n^0)^{b} DTS[n^{a−x}]`.
pub fn apply_speedup1(cls: &SimpleClass, x: &Rational) -> Result<SimpleClass, DerivationError> {
    let inner = cls.blocks.last().ok_or(DerivationError::NoBlocks)?;
    check_x(x, &cls.dts_speed)?;
    let b = inner.input.clone();
    let mut blocks = cls.blocks.clone();
    let kind = inner.kind;
    let last = blocks.last_mut().unwrap();
    last.speed = ratio::max(&last.speed, x).clone();
    last.input = ratio::max(x, &b).clone();
    blocks.push(QuantifierBlock::new(kind.opposite(), Rational::zero(), b));
    Ok(SimpleClass {
        blocks,
        dts_speed: &cls.dts_speed - x,
    })
}

/// Speedup Rule 2: appends two fresh blocks, the first of opposite polarity
/// to the current innermost block.
pub fn apply_speedup2(cls: &SimpleClass, x: &Rational) -> Result<SimpleClass, DerivationError> {
    let inner = cls.blocks.last().ok_or(DerivationError::NoBlocks)?;
    check_x(x, &cls.dts_speed)?;
    let b = inner.input.clone();
    let q = inner.kind.opposite();
    let mut blocks = cls.blocks.clone();
    blocks.push(QuantifierBlock::new(q, x.clone(), ratio::max(x, &b).clone()));
    blocks.push(QuantifierBlock::new(q.opposite(), Rational::zero(), b));
    Ok(SimpleClass {
        blocks,
        dts_speed: &cls.dts_speed - x,
    })
}

/// The intermediate class behind Rule 1 before same-type blocks are merged:
/// the Speedup Lemma invoked with the innermost block's own quantifier.
/// `combine_adjacent` of the result equals [`apply_speedup1`].
pub fn expand_speedup1(cls: &SimpleClass, x: &Rational) -> Result<SimpleClass, DerivationError> {
    let inner = cls.blocks.last().ok_or(DerivationError::NoBlocks)?;
    check_x(x, &cls.dts_speed)?;
    let b = inner.input.clone();
    let q = inner.kind;
    let mut blocks = cls.blocks.clone();
    blocks.push(QuantifierBlock::new(q, x.clone(), ratio::max(x, &b).clone()));
    blocks.push(QuantifierBlock::new(q.opposite(), Rational::zero(), b));
    Ok(SimpleClass {
        blocks,
        dts_speed: &cls.dts_speed - x,
    })
}

/// Merges adjacent blocks of the same polarity: speeds take the maximum and
/// the inner block's trailing input constraint survives.
pub fn combine_adjacent(cls: &SimpleClass) -> SimpleClass {
    let mut blocks: Vec<QuantifierBlock> = Vec::with_capacity(cls.blocks.len());
    for b in &cls.blocks {
        match blocks.last_mut() {
            Some(prev) if prev.kind == b.kind => {
                prev.speed = ratio::max(&prev.speed, &b.speed).clone();
                prev.input = b.input.clone();
            }
            _ => blocks.push(b.clone()),
        }
    }
    SimpleClass {
        blocks,
        dts_speed: cls.dts_speed.clone(),
    }
}

/// Slowdown Rule: removes the innermost block,
/// `… (Q_k n^{a_k})^{b_{k+1}} DTS[n^{a_{k+1}}] ⊆ … DTS[n^{c·max{a_{k+1}, a_k, b_k, b_{k+1}}}]`.
pub fn apply_slowdown(cls: &SimpleClass, c: &Rational) -> Result<SimpleClass, DerivationError> {
    let k = cls.k();
    if k == 0 {
        return Err(DerivationError::NoBlocks);
    }
    if c < &Rational::one() {
        return Err(DerivationError::BadC(ratio::to_string(c)));
    }
    let inner = &cls.blocks[k - 1];
    let b_k = cls.input_of(k);
    let m = [&cls.dts_speed, &inner.speed, &b_k, &inner.input]
        .into_iter()
        .fold(&cls.dts_speed, |acc, v| ratio::max(acc, v));
    let mut blocks = cls.blocks.clone();
    blocks.pop();
    Ok(SimpleClass {
        blocks,
        dts_speed: c * m,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rule {
    Speedup0,
    Speedup1,
    Speedup2,
    Slowdown,
}

impl Rule {
    pub fn is_speedup(self) -> bool {
        !matches!(self, Rule::Slowdown)
    }

    /// Change in the number of quantifier blocks.
    pub fn block_delta(self) -> isize {
        match self {
            Rule::Speedup0 | Rule::Speedup2 => 2,
            Rule::Speedup1 => 1,
            Rule::Slowdown => -1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleApplication {
    pub rule: Rule,
    pub x: Option<Rational>,
}

impl RuleApplication {
    pub fn slowdown() -> Self {
        RuleApplication {
            rule: Rule::Slowdown,
            x: None,
        }
    }

    pub fn speedup(rule: Rule, x: Rational) -> Self {
        debug_assert!(rule.is_speedup());
        RuleApplication { rule, x: Some(x) }
    }

    pub fn apply(&self, cls: &SimpleClass, c: &Rational, outer: Quantifier) -> Result<SimpleClass, DerivationError> {
        let x = || {
            self.x.as_ref().ok_or(DerivationError::SpeedupOutOfRange {
                x: "none".into(),
                upper: ratio::to_string(&cls.dts_speed),
            })
        };
        match self.rule {
            Rule::Speedup0 => apply_speedup0(cls, x()?, outer),
            Rule::Speedup1 => apply_speedup1(cls, x()?),
            Rule::Speedup2 => apply_speedup2(cls, x()?),
            Rule::Slowdown => apply_slowdown(cls, c),
        }
    }
}

/// Rule sequence realised by an annotation: the first speedup is Rule 0,
/// later ones Rule 1.
pub fn rules_of(annotation: &Annotation) -> Vec<Rule> {
    let mut first = true;
    annotation
        .bits()
        .iter()
        .map(|&b| match b {
            false => Rule::Slowdown,
            true if first => {
                first = false;
                Rule::Speedup0
            }
            true => Rule::Speedup1,
        })
        .collect()
}

/// Normal-form check for a general rule sequence (Rule 2 allowed): Rule 0
/// exactly when the class is plain DTS, and the block count returns to
/// zero only at the end.
pub fn check_rule_sequence(rules: &[Rule]) -> Result<Vec<usize>, DerivationError> {
    if rules.len() < 3 {
        return Err(DerivationError::NotNormalForm("fewer than two lines after the first".into()));
    }
    let mut counts = vec![0usize];
    let mut k: isize = 0;
    for (i, &r) in rules.iter().enumerate() {
        let ok = match r {
            Rule::Speedup0 => k == 0,
            Rule::Speedup1 | Rule::Speedup2 | Rule::Slowdown => k > 0,
        };
        if !ok {
            return Err(DerivationError::NotNormalForm(format!("{r:?} not applicable at step {}", i + 1)));
        }
        k += r.block_delta();
        if k == 0 && i + 1 < rules.len() {
            return Err(DerivationError::NotNormalForm(format!("interior DTS line after step {}", i + 1)));
        }
        counts.push(k as usize);
    }
    if k != 0 {
        return Err(DerivationError::NotNormalForm(format!("ends with {k} blocks")));
    }
    Ok(counts)
}

/// Applies `rules` from `DTS[n^{initial}]`, consuming one parameter per
/// speedup. Returns every line, first line included.
pub fn replay_rules(
    rules: &[Rule],
    c: &Rational,
    initial: &Rational,
    xs: &[Rational],
) -> Result<Vec<SimpleClass>, DerivationError> {
    let expected = rules.iter().filter(|r| r.is_speedup()).count();
    if xs.len() != expected {
        return Err(DerivationError::ParamCount { expected, got: xs.len() });
    }
    if initial < &Rational::one() {
        return Err(DerivationError::BadInitial(ratio::to_string(initial)));
    }
    let mut lines = vec![SimpleClass::dts(initial.clone())];
    let mut xs = xs.iter();
    for &rule in rules {
        let app = RuleApplication {
            rule,
            x: rule.is_speedup().then(|| xs.next().unwrap().clone()),
        };
        let next = app.apply(lines.last().unwrap(), c, Quantifier::Exists)?;
        lines.push(next);
    }
    Ok(lines)
}

/// A normal-form alternation-trading proof: annotation plus the numeric
/// choices, with every line replayed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proof {
    #[serde(with = "ratio::serde_str")]
    pub c: Rational,
    #[serde(rename = "initial", with = "ratio::serde_str")]
    pub initial_speed: Rational,
    pub annotation: Annotation,
    #[serde(rename = "xs", with = "ratio::serde_vec")]
    pub speedup_params: Vec<Rational>,
    pub lines: Vec<SimpleClass>,
}

impl Proof {
    pub fn first(&self) -> &SimpleClass {
        &self.lines[0]
    }

    pub fn last(&self) -> &SimpleClass {
        self.lines.last().unwrap()
    }

    /// `a − a′`; the proof wins when this is nonnegative.
    pub fn margin(&self) -> Rational {
        &self.first().dts_speed - &self.last().dts_speed
    }

    pub fn wins(&self) -> bool {
        self.lines.len() >= 2 && self.first().is_dts() && self.last().is_dts() && !self.margin().is_negative()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("proof serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

/// Replays an annotation from `DTS[n^{initial}]`. The win condition is not
/// required here; see [`Proof::wins`] and [`verify_proof`].
pub fn replay(annotation: &Annotation, c: &Rational, initial: &Rational, xs: &[Rational]) -> Result<Proof, DerivationError> {
    crate::annotation::validate(annotation.bits())?;
    let rules = rules_of(annotation);
    let lines = replay_rules(&rules, c, initial, xs)?;
    Ok(Proof {
        c: c.clone(),
        initial_speed: initial.clone(),
        annotation: annotation.clone(),
        speedup_params: xs.to_vec(),
        lines,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// Line index (0 = initial line); `None` for whole-proof problems.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => write!(f, "proof: {}", self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Valid,
    Invalid(Vec<Violation>),
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid)
    }

    pub fn violations(&self) -> &[Violation] {
        match self {
            Verdict::Valid => &[],
            Verdict::Invalid(v) => v,
        }
    }
}

/// Independently re-derives every line of `p` in exact arithmetic and checks
/// the stored lines, the normal-form shape and the win condition `a ≥ a′`.
///
/// Each line is recomputed from the re-derived (not the stored) predecessor,
/// so a tampered line is reported once, at its own index.
pub fn verify_proof(p: &Proof) -> Verdict {
    let mut out = Vec::new();
    let whole = |msg: String| Violation { line: None, message: msg };
    let at = |line: usize, msg: String| Violation { line: Some(line), message: msg };

    if let Err(e) = crate::annotation::validate(p.annotation.bits()) {
        out.push(whole(format!("annotation: {e}")));
        return Verdict::Invalid(out);
    }
    if p.c < Rational::one() {
        out.push(whole(format!("c = {} is below 1", ratio::to_string(&p.c))));
    }
    let rules = rules_of(&p.annotation);
    let speedups = rules.iter().filter(|r| r.is_speedup()).count();
    if p.speedup_params.len() != speedups {
        out.push(whole(format!(
            "{} speedup parameters for {} speedups",
            p.speedup_params.len(),
            speedups
        )));
        return Verdict::Invalid(out);
    }
    if p.lines.len() != rules.len() + 1 {
        out.push(whole(format!(
            "{} lines stored, annotation implies {}",
            p.lines.len(),
            rules.len() + 1
        )));
        return Verdict::Invalid(out);
    }
    for (i, line) in p.lines.iter().enumerate() {
        if let Err(e) = line.check() {
            out.push(at(i, e.to_string()));
        }
        if !line.is_alternating() {
            out.push(at(i, "adjacent blocks share a quantifier".into()));
        }
        let interior = i > 0 && i + 1 < p.lines.len();
        if interior && line.is_dts() {
            out.push(at(i, "interior line is a plain DTS class".into()));
        }
        if !interior && !line.is_dts() {
            out.push(at(i, "first and last lines must be plain DTS classes".into()));
        }
    }
    if p.initial_speed < Rational::one() {
        out.push(at(0, format!("initial exponent {} below 1", ratio::to_string(&p.initial_speed))));
    }
    let expected_first = SimpleClass::dts(p.initial_speed.clone());
    if p.lines[0] != expected_first {
        out.push(at(0, format!("expected {expected_first}, found {}", p.lines[0])));
    }

    let mut current = expected_first;
    let mut xs = p.speedup_params.iter();
    for (i, &rule) in rules.iter().enumerate() {
        let outer = match rule {
            Rule::Speedup0 => p.lines[i + 1].blocks.first().map_or(Quantifier::Exists, |b| b.kind),
            _ => Quantifier::Exists,
        };
        let app = RuleApplication {
            rule,
            x: rule.is_speedup().then(|| xs.next().unwrap().clone()),
        };
        match app.apply(&current, &p.c, outer) {
            Ok(next) => {
                if next != p.lines[i + 1] {
                    out.push(at(i + 1, format!("expected {next}, found {}", p.lines[i + 1])));
                }
                current = next;
            }
            Err(e) => {
                out.push(at(i + 1, e.to_string()));
                return Verdict::Invalid(out);
            }
        }
    }
    let a = &p.lines[0].dts_speed;
    let a_final = &current.dts_speed;
    if a < a_final {
        out.push(at(
            p.lines.len() - 1,
            format!(
                "win condition fails: {} < {}",
                ratio::to_string(a),
                ratio::to_string(a_final)
            ),
        ));
    }
    if out.is_empty() {
        Verdict::Valid
    } else {
        Verdict::Invalid(out)
    }
}

fn exponent(r: &Rational) -> String {
    let s = ratio::to_string(r);
    if s.len() == 1 {
        s
    } else {
        format!("{{{s}}}")
    }
}

impl fmt::Display for QuantifierBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} n^{})^{}", self.kind.symbol(), exponent(&self.speed), exponent(&self.input))
    }
}

impl fmt::Display for SimpleClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.blocks {
            write!(f, "{b} ")?;
        }
        write!(f, "DTS[n^{}]", exponent(&self.dts_speed))
    }
}

const TAG_SPEEDUP: &str = "Speedup";
const TAG_SLOWDOWN: &str = "Slowdown";

/// Renders the derivation one step per line, the layout used in the
/// literature: Rule 1 steps are shown as the raw speedup followed by the
/// quantifier-combining equality. The output parses back with
/// [`parse_printed`].
pub fn pretty_print(p: &Proof) -> String {
    let mut s = String::new();
    let xs_str: Vec<String> = p.speedup_params.iter().map(ratio::to_string).collect();
    s.push_str(&format!("c = {}\n", ratio::to_string(&p.c)));
    s.push_str(&format!("annotation = {}\n", p.annotation));
    s.push_str(&format!("xs = [{}]\n", xs_str.join(", ")));
    s.push_str(&format!("    {}\n", p.lines[0]));
    let rules = rules_of(&p.annotation);
    let mut xs = p.speedup_params.iter();
    for (i, &rule) in rules.iter().enumerate() {
        let prev = &p.lines[i];
        let next = &p.lines[i + 1];
        match rule {
            Rule::Slowdown => s.push_str(&format!("  ⊆ {next}    ({TAG_SLOWDOWN})\n")),
            Rule::Speedup0 | Rule::Speedup2 => {
                let x = xs.next().unwrap();
                s.push_str(&format!("  ⊆ {next}    ({TAG_SPEEDUP}, x = {})\n", ratio::to_string(x)));
            }
            Rule::Speedup1 => {
                let x = xs.next().unwrap();
                let raw = expand_speedup1(prev, x)
                    .map(|c| c.to_string())
                    .unwrap_or_else(|e| format!("<{e}>"));
                let q = prev.blocks.last().map_or("?", |b| b.kind.symbol());
                s.push_str(&format!("  ⊆ {raw}    ({TAG_SPEEDUP}, x = {})\n", ratio::to_string(x)));
                s.push_str(&format!("  = {next}    (Combining {q} quantifiers)\n"));
            }
        }
    }
    let (a, a2) = (&p.first().dts_speed, &p.last().dts_speed);
    let rel = if a >= a2 { "≥" } else { "<" };
    s.push_str(&format!(
        "∴ {} ⊆ {}, and {} {} {}\n",
        p.first(),
        p.last(),
        ratio::to_string(a),
        rel,
        ratio::to_string(a2)
    ));
    s
}

fn parse_exponent(s: &str) -> Option<(Rational, &str)> {
    if let Some(rest) = s.strip_prefix('{') {
        let end = rest.find('}')?;
        Some((ratio::parse(&rest[..end]).ok()?, &rest[end + 1..]))
    } else {
        let end = s
            .char_indices()
            .find(|(_, c)| !(c.is_ascii_digit() || *c == '-'))
            .map_or(s.len(), |(i, _)| i);
        Some((ratio::parse(&s[..end]).ok()?, &s[end..]))
    }
}

/// Parses a class written in the notation produced by `Display`.
pub fn parse_class(s: &str) -> Option<SimpleClass> {
    let mut rest = s.trim();
    let mut blocks = Vec::new();
    while let Some(r) = rest.strip_prefix('(') {
        let r = r.trim_start();
        let (kind, r) = if let Some(r) = r.strip_prefix('∃') {
            (Quantifier::Exists, r)
        } else {
            let r = r.strip_prefix('∀')?;
            (Quantifier::Forall, r)
        };
        let r = r.trim_start().strip_prefix("n^")?;
        let (speed, r) = parse_exponent(r)?;
        let r = r.strip_prefix(")^")?;
        let (input, r) = parse_exponent(r)?;
        blocks.push(QuantifierBlock::new(kind, speed, input));
        rest = r.trim_start();
    }
    let r = rest.strip_prefix("DTS[n^")?;
    let (dts_speed, r) = parse_exponent(r)?;
    if r.trim() != "]" {
        return None;
    }
    Some(SimpleClass { blocks, dts_speed })
}

/// Inverse of [`pretty_print`].
pub fn parse_printed(text: &str) -> Result<Proof, DerivationError> {
    let perr = |line: usize, msg: &str| DerivationError::Parse {
        line,
        msg: msg.to_string(),
    };
    let mut c = None;
    let mut annotation = None;
    let mut xs = None;
    let mut lines: Vec<SimpleClass> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let ln = n + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('∴') || t.starts_with('#') {
            continue;
        }
        if let Some(v) = t.strip_prefix("c = ") {
            c = Some(ratio::parse(v).map_err(|e| perr(ln, &e.to_string()))?);
        } else if let Some(v) = t.strip_prefix("annotation = ") {
            annotation = Some(v.parse::<Annotation>().map_err(|e| perr(ln, &e.to_string()))?);
        } else if let Some(v) = t.strip_prefix("xs = ") {
            let inner = v.trim().trim_start_matches('[').trim_end_matches(']');
            let parsed = inner
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(ratio::parse)
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| perr(ln, &e.to_string()))?;
            xs = Some(parsed);
        } else {
            let (combine, body) = if let Some(b) = t.strip_prefix('⊆') {
                (false, b)
            } else if let Some(b) = t.strip_prefix('=') {
                (true, b)
            } else {
                (false, t)
            };
            let class_text = body.split("    (").next().unwrap_or(body);
            let cls = parse_class(class_text).ok_or_else(|| perr(ln, "malformed class"))?;
            if combine {
                // Replaces the raw (uncombined) speedup line just read.
                lines.pop().ok_or_else(|| perr(ln, "combining step without a preceding speedup"))?;
            }
            lines.push(cls);
        }
    }
    let c = c.ok_or_else(|| perr(0, "missing `c = ` header"))?;
    let annotation = annotation.ok_or_else(|| perr(0, "missing `annotation = ` header"))?;
    let xs = xs.ok_or_else(|| perr(0, "missing `xs = ` header"))?;
    let initial = lines
        .first()
        .map(|l| l.dts_speed.clone())
        .ok_or_else(|| perr(0, "no derivation lines"))?;
    Ok(Proof {
        c,
        initial_speed: initial,
        annotation,
        speedup_params: xs,
        lines,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio::{frac, int, parse};
    use Quantifier::{Exists as E, Forall as A};

    fn q(kind: Quantifier, speed: &str, input: &str) -> QuantifierBlock {
        QuantifierBlock::new(kind, parse(speed).unwrap(), parse(input).unwrap())
    }

    fn class(blocks: Vec<QuantifierBlock>, dts: &str) -> SimpleClass {
        SimpleClass::new(blocks, parse(dts).unwrap()).unwrap()
    }

    fn r(s: &str) -> Rational {
        parse(s).unwrap()
    }

    #[test]
    fn speedup0_examples() {
        let out = apply_speedup0(&SimpleClass::dts(int(2)), &int(1), A).unwrap();
        assert_eq!(out, class(vec![q(A, "1", "1"), q(E, "0", "1")], "1"));
        let out = apply_speedup0(&SimpleClass::dts(r("3.28")), &r("1.28"), E).unwrap();
        assert_eq!(out, class(vec![q(E, "1.28", "1.28"), q(A, "0", "1")], "2"));
        let out = apply_speedup0(&SimpleClass::dts(int(1)), &r("0.5"), E).unwrap();
        assert_eq!(out, class(vec![q(E, "0.5", "1"), q(A, "0", "1")], "0.5"));
    }

    #[test]
    fn speedup0_errors() {
        let d = SimpleClass::dts(int(2));
        assert!(matches!(apply_speedup0(&d, &int(0), E), Err(DerivationError::SpeedupOutOfRange { .. })));
        assert!(matches!(apply_speedup0(&d, &int(2), E), Err(DerivationError::SpeedupOutOfRange { .. })));
        let nd = class(vec![q(A, "1", "1")], "1");
        assert_eq!(apply_speedup0(&nd, &r("0.5"), E), Err(DerivationError::NotPlainDts(1)));
    }

    #[test]
    fn speedup1_examples() {
        let c = class(vec![q(E, "1.28", "1.28"), q(A, "0", "1")], "2");
        let out = apply_speedup1(&c, &int(1)).unwrap();
        assert_eq!(out, class(vec![q(E, "1.28", "1.28"), q(A, "1", "1"), q(E, "0", "1")], "1"));

        let c = class(vec![q(E, "1.28", "1.28")], "2.56");
        let out = apply_speedup1(&c, &r("1.28")).unwrap();
        assert_eq!(out, class(vec![q(E, "1.28", "1.28"), q(A, "0", "1.28")], "1.28"));

        let c = class(vec![q(A, "1", "1")], "1");
        let out = apply_speedup1(&c, &r("0.5")).unwrap();
        assert_eq!(out, class(vec![q(A, "1", "1"), q(E, "0", "1")], "0.5"));

        assert_eq!(apply_speedup1(&SimpleClass::dts(int(2)), &int(1)), Err(DerivationError::NoBlocks));
        assert!(apply_speedup1(&c, &int(1)).is_err());
    }

    #[test]
    fn speedup2_and_expanded_speedup1() {
        let c = class(vec![q(E, "1.28", "1.28")], "2.56");
        let raw = expand_speedup1(&c, &r("1.28")).unwrap();
        assert_eq!(
            raw,
            class(vec![q(E, "1.28", "1.28"), q(E, "1.28", "1.28"), q(A, "0", "1.28")], "1.28")
        );
        assert!(!raw.is_alternating());
        assert_eq!(combine_adjacent(&raw), apply_speedup1(&c, &r("1.28")).unwrap());

        let two = apply_speedup2(&c, &r("1.28")).unwrap();
        assert_eq!(
            two,
            class(vec![q(E, "1.28", "1.28"), q(A, "1.28", "1.28"), q(E, "0", "1.28")], "1.28")
        );
        assert!(two.is_alternating());

        let c = class(vec![q(A, "1", "1")], "2");
        let out = apply_speedup2(&c, &int(1)).unwrap();
        assert_eq!(out, class(vec![q(A, "1", "1"), q(E, "1", "1"), q(A, "0", "1")], "1"));
    }

    #[test]
    fn combine_examples() {
        let alt = class(vec![q(E, "1", "1"), q(A, "2", "2")], "1");
        assert_eq!(combine_adjacent(&alt), alt);
        let same = class(vec![q(E, "2", "2"), q(E, "1", "1")], "1");
        assert_eq!(combine_adjacent(&same), class(vec![q(E, "2", "1")], "1"));
        let twice = combine_adjacent(&same);
        assert_eq!(combine_adjacent(&twice), twice);
    }

    #[test]
    fn slowdown_examples() {
        let c = class(vec![q(E, "1.28", "1.28"), q(A, "1", "1"), q(E, "0", "1")], "1");
        let out = apply_slowdown(&c, &r("1.6")).unwrap();
        assert_eq!(out, class(vec![q(E, "1.28", "1.28"), q(A, "1", "1")], "1.6"));

        // 2/c² and 2/c at c = 1.4, exactly.
        let t = frac(50, 49);
        let c = SimpleClass {
            blocks: vec![QuantifierBlock::new(E, t.clone(), t.clone()), QuantifierBlock::new(A, t.clone(), t.clone())],
            dts_speed: t.clone(),
        };
        let out = apply_slowdown(&c, &r("1.4")).unwrap();
        assert_eq!(out.blocks, vec![QuantifierBlock::new(E, t.clone(), t.clone())]);
        assert_eq!(out.dts_speed, frac(10, 7));

        let c = class(vec![q(A, "1", "1")], "1");
        assert_eq!(apply_slowdown(&c, &int(1)).unwrap(), SimpleClass::dts(int(1)));

        assert_eq!(apply_slowdown(&SimpleClass::dts(int(1)), &int(2)), Err(DerivationError::NoBlocks));
        assert!(matches!(apply_slowdown(&c, &r("0.9")), Err(DerivationError::BadC(_))));
    }

    #[test]
    fn slowdown_at_k1_reads_original_input() {
        // b_1 = 1 even when the block's own trailing constraint is larger.
        let c = class(vec![q(E, "0.5", "3")], "1");
        assert_eq!(apply_slowdown(&c, &int(2)).unwrap(), SimpleClass::dts(int(6)));
        let c = class(vec![q(E, "0.5", "1")], "0.25");
        assert_eq!(apply_slowdown(&c, &int(2)).unwrap(), SimpleClass::dts(int(2)));
    }

    #[test]
    fn block_counts_change_by_rule() {
        let d = SimpleClass::dts(int(8));
        let r0 = apply_speedup0(&d, &int(1), E).unwrap();
        assert_eq!(r0.k(), 2);
        let r1 = apply_speedup1(&r0, &int(1)).unwrap();
        assert_eq!(r1.k(), 3);
        let r2 = apply_speedup2(&r1, &int(1)).unwrap();
        assert_eq!(r2.k(), 5);
        assert_eq!(apply_slowdown(&r2, &int(1)).unwrap().k(), 4);
    }

    #[test]
    fn default_input_constraint() {
        assert_eq!(QuantifierBlock::with_default_input(E, r("0.5")).input, int(1));
        assert_eq!(QuantifierBlock::with_default_input(E, r("1.5")).input, r("1.5"));
    }

    #[test]
    fn replay_lipton_viglas_shape() {
        let a: Annotation = "100".parse().unwrap();
        // Final exponent is c² for x = 1, a = 2; wins exactly when c² ≤ 2.
        for (c, wins) in [("1.4", true), ("1.4142", true), ("1.5", false)] {
            let p = replay(&a, &r(c), &int(2), &[int(1)]).unwrap();
            assert_eq!(p.last().dts_speed, r(c) * r(c));
            assert_eq!(p.wins(), wins, "c = {c}");
        }
        let p = replay(&a, &r("1.5"), &int(2), &[int(1)]).unwrap();
        assert_eq!(p.last().dts_speed, r("2.25"));
        assert!(!verify_proof(&p).is_valid());
    }

    fn example2(c: &str) -> Proof {
        let a: Annotation = "1100100".parse().unwrap();
        let cc = r(c);
        let x1 = &cc * &cc / int(2);
        let initial = &x1 + int(2);
        replay(&a, &cc, &initial, &[x1.clone(), int(1), x1]).unwrap()
    }

    #[test]
    fn replay_seven_step_example() {
        let p = example2("1.6");
        assert_eq!(p.lines.len(), 8);
        assert_eq!(p.first().dts_speed, r("3.28"));
        assert_eq!(p.last().dts_speed, r("3.2768"));
        assert!(p.wins());
        assert!(verify_proof(&p).is_valid());
        let ks: Vec<usize> = p.lines.iter().map(|l| l.k()).collect();
        assert_eq!(ks, [0, 2, 3, 2, 1, 2, 1, 0]);
    }

    #[test]
    fn verify_detects_win_failure_above_threshold() {
        // c²/2 + 2 = 3.29605 < c⁴/2 = 3.359491… at c = 1.61.
        let p = example2("1.61");
        assert_eq!(p.first().dts_speed, r("3.29605"));
        let c = r("1.61");
        assert_eq!(p.last().dts_speed, &c * &c * &c * &c / int(2));
        let v = verify_proof(&p);
        assert!(!v.is_valid());
        assert_eq!(v.violations().len(), 1);
        assert_eq!(v.violations()[0].line, Some(7));
        assert!(v.violations()[0].message.contains("win condition"));
    }

    #[test]
    fn verify_detects_tampering() {
        let mut p = example2("1.6");
        p.lines[3].dts_speed += r("0.01");
        let v = verify_proof(&p);
        let lines: Vec<Option<usize>> = v.violations().iter().map(|v| v.line).collect();
        assert_eq!(lines, [Some(3)]);

        let mut p = example2("1.6");
        p.speedup_params.pop();
        assert!(!verify_proof(&p).is_valid());

        let mut p = example2("1.6");
        p.lines[2].blocks[1].kind = E;
        assert!(!verify_proof(&p).is_valid());
    }

    #[test]
    fn replay_errors() {
        let a: Annotation = "100".parse().unwrap();
        assert!(matches!(
            replay(&a, &int(1), &int(2), &[]),
            Err(DerivationError::ParamCount { expected: 1, got: 0 })
        ));
        assert!(matches!(
            replay(&a, &int(1), &int(2), &[int(2)]),
            Err(DerivationError::SpeedupOutOfRange { .. })
        ));
        assert!(matches!(replay(&a, &int(1), &r("0.5"), &[r("0.25")]), Err(DerivationError::BadInitial(_))));
        assert!("".parse::<Annotation>().is_err());
    }

    #[test]
    fn rule_sequences() {
        use Rule::*;
        assert!(check_rule_sequence(&[Speedup0, Slowdown, Slowdown]).is_ok());
        assert!(check_rule_sequence(&[Speedup0, Speedup2, Slowdown, Slowdown, Slowdown, Slowdown]).is_ok());
        assert!(check_rule_sequence(&[Speedup1, Slowdown, Slowdown]).is_err());
        assert!(check_rule_sequence(&[Speedup0, Slowdown, Slowdown, Speedup0, Slowdown, Slowdown]).is_err());
        let a: Annotation = "1100100".parse().unwrap();
        assert_eq!(rules_of(&a), [Speedup0, Speedup1, Slowdown, Slowdown, Speedup1, Slowdown, Slowdown]);
    }

    #[test]
    fn pretty_print_round_trips() {
        let p = example2("1.6");
        let text = pretty_print(&p);
        assert_eq!(text.lines().filter(|l| l.trim_start().starts_with(['⊆', '='])).count(), 9);
        assert_eq!(parse_printed(&text).unwrap(), p);

        let a: Annotation = "100".parse().unwrap();
        let p = replay(&a, &r("1.4"), &int(2), &[int(1)]).unwrap();
        let text = pretty_print(&p);
        let steps = text.lines().filter(|l| l.trim_start().starts_with('⊆')).count();
        assert_eq!(steps, 3);
        assert!(text.lines().last().unwrap().starts_with("∴ DTS[n^2] ⊆ DTS[n^{49/25}]"));
        assert_eq!(parse_printed(&text).unwrap(), p);
    }

    #[test]
    fn json_round_trip_uses_string_rationals() {
        let p = example2("1.6");
        let json = p.to_json();
        assert!(json.contains("\"c\": \"8/5\""));
        assert!(json.contains("\"annotation\": \"1100100\""));
        assert_eq!(Proof::from_json(&json).unwrap(), p);
    }

    #[test]
    fn class_notation_parses() {
        let c = class(vec![q(E, "1.28", "1.28"), q(A, "0", "1")], "2");
        assert_eq!(c.to_string(), "(∃ n^{32/25})^{32/25} (∀ n^0)^1 DTS[n^2]");
        assert_eq!(parse_class(&c.to_string()).unwrap(), c);
        assert_eq!(parse_class("DTS[n^{10/7}]").unwrap(), SimpleClass::dts(frac(10, 7)));
        assert!(parse_class("DTS[n^x]").is_none());
    }
}
