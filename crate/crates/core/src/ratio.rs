//! Exact rational helpers: parsing, formatting, float conversion and
//! best-approximation utilities over [`Rational`].

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serializer};

/// Arbitrary-precision rational used for every exponent in the crate.
pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse `{input}` as a rational: {reason}")]
pub struct ParseRationalError {
    pub input: String,
    pub reason: &'static str,
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn frac(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// Parses `p/q`, an integer, or a finite decimal such as `1.28` or `-0.5`.
/// Scientific notation (`1e-6`) is accepted as well.
pub fn parse(s: &str) -> Result<Rational, ParseRationalError> {
    let err = |reason| ParseRationalError {
        input: s.to_string(),
        reason,
    };
    let t = s.trim();
    if t.is_empty() {
        return Err(err("empty"));
    }
    if let Some((p, q)) = t.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| err("bad numerator"))?;
        let q: BigInt = q.trim().parse().map_err(|_| err("bad denominator"))?;
        if q.is_zero() {
            return Err(err("zero denominator"));
        }
        return Ok(Rational::new(p, q));
    }
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => {
            let e: i32 = t[i + 1..].parse().map_err(|_| err("bad exponent"))?;
            (&t[..i], e)
        }
        None => (t, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, fracpart) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && fracpart.is_empty() {
        return Err(err("no digits"));
    }
    if !whole.chars().chain(fracpart.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err("unexpected character"));
    }
    let joined = format!("{whole}{fracpart}");
    let numer: BigInt = if joined.is_empty() {
        BigInt::zero()
    } else {
        joined.parse().map_err(|_| err("bad digits"))?
    };
    let scale = exp - fracpart.len() as i32;
    let ten = BigInt::from(10);
    let mut r = if scale >= 0 {
        Rational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        Rational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        r = -r;
    }
    Ok(r)
}

/// Canonical `p/q` form (`p` alone when the denominator is 1).
pub fn to_string(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Huge numerators/denominators overflow the direct conversion.
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// The exact binary value of a finite float.
pub fn from_f64_exact(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

/// Closest rational to `x` with denominator at most `max_den`
/// (continued-fraction convergents and semiconvergents).
pub fn approximate(x: f64, max_den: u64) -> Option<Rational> {
    let exact = from_f64_exact(x)?;
    Some(best_approximation(&exact, &BigInt::from(max_den)))
}

fn best_approximation(target: &Rational, max_den: &BigInt) -> Rational {
    if target.denom() <= max_den {
        return target.clone();
    }
    let (mut p0, mut q0) = (BigInt::zero(), BigInt::one());
    let (mut p1, mut q1) = (BigInt::one(), BigInt::zero());
    let mut n = target.numer().clone();
    let mut d = target.denom().clone();
    loop {
        let (a, r) = n.div_mod_floor(&d);
        let q2 = &q0 + &a * &q1;
        if &q2 > max_den {
            let k = (max_den - &q0) / &q1;
            let semi = Rational::new(&p0 + &k * &p1, &q0 + &k * &q1);
            let conv = Rational::new(p1.clone(), q1.clone());
            let ds = (&semi - target).abs();
            let dc = (&conv - target).abs();
            return if ds < dc { semi } else { conv };
        }
        let p2 = &p0 + &a * &p1;
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
        if r.is_zero() {
            return Rational::new(p1, q1);
        }
        n = std::mem::replace(&mut d, r);
    }
}

/// Simplest rational within `1/(2·max_den)` of `x`; its denominator is at
/// most `max_den`. Recovers `p/q` from a float carrying a few ulps of noise,
/// where [`approximate`] would fit the noise.
pub fn simplest_near(x: f64, max_den: u64) -> Option<Rational> {
    let exact = from_f64_exact(x)?;
    let half = Rational::new(BigInt::one(), BigInt::from(max_den) * 2);
    Some(simplest_between(&(&exact - &half), &(&exact + &half)))
}

/// The rational with the smallest denominator in the closed interval `[lo, hi]`.
pub fn simplest_between(lo: &Rational, hi: &Rational) -> Rational {
    assert!(lo <= hi, "empty interval");
    if lo.is_negative() && hi.is_positive() || lo.is_zero() || hi.is_zero() {
        return Rational::zero();
    }
    if hi.is_negative() {
        return -simplest_between(&-hi, &-lo);
    }
    let fl = lo.floor();
    if &fl == lo {
        return fl;
    }
    if fl.clone() + Rational::one() <= *hi {
        return fl + Rational::one();
    }
    // Both endpoints share the integer part; recurse on reciprocals of the
    // fractional parts.
    let lo_frac = lo - &fl;
    let hi_frac = hi - &fl;
    fl + simplest_between(&hi_frac.recip(), &lo_frac.recip()).recip()
}

pub fn max<'a>(a: &'a Rational, b: &'a Rational) -> &'a Rational {
    if a >= b {
        a
    } else {
        b
    }
}

/// Display wrapper printing a rational as a decimal with `digits` places.
pub struct Decimal<'a>(pub &'a Rational, pub usize);

impl fmt::Display for Decimal<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.0;
        if r.denom().is_one() {
            return write!(f, "{}", r.numer());
        }
        let scale = num_traits::pow(BigInt::from(10), self.1);
        let scaled = (r * Rational::from_integer(scale.clone())).round().to_integer();
        let neg = scaled.is_negative();
        let abs = scaled.abs();
        let (whole, rem) = abs.div_rem(&scale);
        let mut digits = format!("{:0>width$}", rem.to_string(), width = self.1);
        while digits.ends_with('0') {
            digits.pop();
        }
        let sign = if neg { "-" } else { "" };
        if digits.is_empty() {
            write!(f, "{sign}{whole}")
        } else {
            write!(f, "{sign}{whole}.{digits}")
        }
    }
}

/// Serde adapter storing a rational as its `p/q` string.
pub mod serde_str {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&to_string(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Vec<Rational>` as a list of `p/q` strings.
pub mod serde_vec {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for r in v {
            seq.serialize_element(&to_string(r))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter()
            .map(|s| parse(s).map_err(serde::de::Error::custom))
            .collect()
    }
}
