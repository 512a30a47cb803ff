//! Exact combinatorics of external angles for real quadratic polynomials.
//!
//! Angles on the circle are exact rationals; the doubling map, the set of
//! angles whose parameter rays reach the real slice, the `K_sigma` interval
//! hierarchies, kneading itineraries and the angle function `tau`, the tuning
//! substitution on binary expansions, biaccessibility dimension bounds, and an
//! inverse-iteration dynamic-ray tracer for closed-loop verification.
//!
//! Everything combinatorial is computed in exact rational arithmetic so that
//! set-membership tests are decisions, not estimates. Orbit computations in
//! the dynamical plane use fixed-point ball arithmetic with certified signs.

pub mod angle;
pub mod ball;
pub mod biaccess;
pub mod kneading;
pub mod ksigma;
pub mod raytrace;
pub mod realslice;
pub mod tuning;

/// Exact rational scalar used for all angle and interval arithmetic.
pub type Rat = num_rational::BigRational;
/// Arbitrary-precision integer.
pub type Int = num_bigint::BigInt;

pub use angle::{Angle, BinaryWord, DyadicTail};
pub use realslice::{IntervalSet, Opening};

/// Convenience: build an exact rational from an integer pair.
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(Int::from(num), Int::from(den))
}

/// serde adapter: exact rationals as `"num/den"` strings.
pub mod rat_serde {
    use super::Rat;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(v: &Rat, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&format_args!("{}/{}", v.numer(), v.denom()))
    }
}

/// Lossy conversion of an exact rational to `f64`.
pub fn rat_to_f64(v: &Rat) -> f64 {
    num_traits::ToPrimitive::to_f64(v).unwrap_or(f64::NAN)
}

/// Parses a plain decimal string (`-1.401155`, `0.25`, `3`) into an exact
/// rational. Returns `None` on malformed input.
pub fn parse_decimal(s: &str) -> Option<Rat> {
    let s = s.trim();
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let digits = format!("{}{}", int_part, frac_part);
    let num: Int = if digits.is_empty() {
        return None;
    } else {
        digits.parse().ok()?
    };
    let den = num_traits::pow(Int::from(10), frac_part.len());
    Some(Rat::new(num * sign, den))
}
