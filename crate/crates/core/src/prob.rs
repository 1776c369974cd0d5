//! Exact rational probabilities and rewards.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Prob = BigRational;

pub fn zero() -> Prob {
    Prob::zero()
}

pub fn one() -> Prob {
    Prob::one()
}

pub fn from_int(n: i64) -> Prob {
    Prob::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Prob {
    Prob::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `12`, `-3`, `0.85`, `.5` or `1/3`.
pub fn parse(text: &str) -> Option<Prob> {
    let text = text.trim();
    if let Some((n, d)) = text.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Prob::new(n, d));
    }
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    if body.is_empty() {
        return None;
    }
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if !int.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    let digits = format!("{int}{frac}");
    let n: BigInt = digits.parse().ok()?;
    let d = BigInt::from(10u32).pow(frac.len() as u32);
    let v = Prob::new(n, d);
    Some(if neg { -v } else { v })
}

/// `num/den` form, `n` when the denominator is 1.
pub fn to_exact_string(p: &Prob) -> String {
    if p.denom().is_one() {
        p.numer().to_string()
    } else {
        format!("{}/{}", p.numer(), p.denom())
    }
}

pub fn from_exact_string(s: &str) -> Option<Prob> {
    parse(s)
}

pub fn to_f64(p: &Prob) -> f64 {
    if let (Some(n), Some(d)) = (p.numer().to_f64(), p.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    // Scale down huge numerators and denominators together.
    let shift = p.numer().bits().max(p.denom().bits()).saturating_sub(1000);
    let n = (p.numer() >> shift as usize).to_f64().unwrap_or(f64::NAN);
    let d = (p.denom() >> shift as usize).to_f64().unwrap_or(f64::NAN);
    n / d
}

/// Shortest decimal with at most `digits` significant digits that reads back
/// as the same value at that precision.
pub fn format_decimal(p: &Prob, digits: usize) -> String {
    format_f64(to_f64(p), digits)
}

pub fn format_f64(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let target: f64 = format!("{:.*e}", digits.saturating_sub(1), x).parse().unwrap_or(x);
    for prec in 1..=digits {
        let s = format!("{:.*e}", prec - 1, x);
        let v: f64 = s.parse().unwrap_or(f64::NAN);
        if v == target {
            return plain(v);
        }
    }
    plain(target)
}

fn plain(v: f64) -> String {
    let s = format!("{v}");
    if s.contains('e') {
        format!("{v:e}")
    } else {
        s
    }
}

pub fn is_probability(p: &Prob) -> bool {
    !p.is_negative() && *p <= one()
}
