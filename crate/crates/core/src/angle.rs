//! Exact arithmetic on angles in R/Z: rationals modulo 1, binary expansions,
//! the doubling map and its orbits, and distances to dyadic rationals.

use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{Int, Rat};

/// Convention for resolving the two binary expansions of a dyadic rational.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum DyadicTail {
    /// The terminating expansion, ending in an infinite string of zeros.
    #[default]
    Zeros,
    /// The co-terminating expansion, ending in an infinite string of ones.
    Ones,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AngleParseError {
    #[error("angle must be written as num/den or an integer: {0}")]
    Malformed(String),
    #[error("zero denominator")]
    ZeroDenominator,
}

/// An exact rational angle, always reduced and normalized to `0 <= t < 1`.
///
/// This is the universal currency of the crate: external angles, values of
/// the angle function, opening endpoints, and every element of the interval
/// hierarchies are `Angle`s.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Angle {
    r: Rat,
}

impl Angle {
    /// Builds `num/den` reduced modulo 1. Panics on zero denominator.
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Self::from_rat(Rat::new(Int::from(num), Int::from(den)))
    }

    /// Normalizes an exact rational to `[0, 1)`.
    pub fn from_rat(r: Rat) -> Self {
        let f = r.floor();
        Angle { r: r - f }
    }

    pub fn zero() -> Self {
        Angle { r: Rat::zero() }
    }

    pub fn half() -> Self {
        Angle {
            r: Rat::new(Int::one(), Int::from(2)),
        }
    }

    pub fn as_rat(&self) -> &Rat {
        &self.r
    }

    pub fn numer(&self) -> &Int {
        self.r.numer()
    }

    pub fn denom(&self) -> &Int {
        self.r.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.r.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        self.r.to_f64().unwrap_or(f64::NAN)
    }

    /// The doubling map `t -> 2t (mod 1)`.
    pub fn double(&self) -> Self {
        Self::from_rat(&self.r * Rat::from_integer(Int::from(2)))
    }

    /// The conjugation `t -> 1 - t (mod 1)`; an involution.
    pub fn complement(&self) -> Self {
        Self::from_rat(Rat::one() - &self.r)
    }

    /// Canonical representative in `[0, 1/2]`: `min(t, 1 - t)`.
    pub fn fold_to_half(&self) -> Self {
        let c = self.complement();
        if c < *self {
            c
        } else {
            self.clone()
        }
    }

    /// True iff the denominator is a power of two (including 1).
    pub fn is_dyadic(&self) -> bool {
        let d = self.r.denom();
        d.is_one() || (d & (d - Int::one())).is_zero()
    }

    /// `v_2(denominator)`: the preperiod of the binary expansion.
    pub fn bit_preperiod(&self) -> u64 {
        let mut d = self.r.denom().clone();
        let mut v = 0u64;
        while d.is_even() {
            d /= 2;
            v += 1;
        }
        v
    }

    /// Multiplicative order of 2 modulo the odd part of the denominator:
    /// the eventual period of the binary expansion (1 for dyadic angles).
    pub fn bit_period(&self) -> u64 {
        let mut d = self.r.denom().clone();
        while d.is_even() {
            d /= 2;
        }
        if d.is_one() {
            return 1;
        }
        let mut pow = Int::from(2) % &d;
        let mut k = 1u64;
        while !pow.is_one() {
            pow = (pow * 2) % &d;
            k += 1;
        }
        k
    }

    /// Exact period under the doubling map when the orbit is purely periodic
    /// (odd denominator), `None` otherwise.
    pub fn doubling_period(&self) -> Option<u64> {
        if self.r.denom().is_even() {
            None
        } else {
            Some(self.bit_period())
        }
    }

    /// Orbit under doubling up to the first repetition.
    ///
    /// Rational orbits are eventually periodic: the returned list has
    /// `preperiod + period` distinct elements and doubling the last element
    /// yields `orbit[preperiod]`.
    pub fn orbit_cycle(&self) -> OrbitCycle {
        let preperiod = self.bit_preperiod();
        let period = self.bit_period();
        let mut orbit = Vec::with_capacity((preperiod + period) as usize);
        let mut x = self.clone();
        for _ in 0..(preperiod + period) {
            orbit.push(x.clone());
            x = x.double();
        }
        OrbitCycle {
            preperiod: preperiod as usize,
            period: period as usize,
            orbit,
        }
    }

    /// First `n` bits of a binary expansion of `t`.
    ///
    /// Non-dyadic angles have a unique expansion and the tail flag is
    /// ignored; dyadic angles follow the requested convention.
    pub fn binary_expansion(&self, n: usize, tail: DyadicTail) -> BinaryWord {
        let mut bits = Vec::with_capacity(n);
        let two = Rat::from_integer(Int::from(2));
        let mut frac = self.r.clone();
        for _ in 0..n {
            frac = &frac * &two;
            if frac >= Rat::one() {
                bits.push(true);
                frac -= Rat::one();
            } else {
                bits.push(false);
            }
        }
        if tail == DyadicTail::Ones && self.is_dyadic() {
            if self.r.is_zero() {
                bits = vec![true; n];
            } else if let Some(last_one) = bits.iter().rposition(|&b| b) {
                // 0.b..b 1 0^inf == 0.b..b 0 1^inf; the flip point is the
                // last set bit, provided it was not truncated away.
                if frac.is_zero() {
                    bits[last_one] = false;
                    for b in bits.iter_mut().skip(last_one + 1) {
                        *b = true;
                    }
                }
            }
        }
        BinaryWord { bits }
    }

    /// Distance to the closest dyadic rational of generation `n`
    /// (numbers `odd/2^n`), in the circle metric. Always `<= 2^-n`.
    pub fn dyadic_distance(&self, n: u64) -> Rat {
        assert!(n >= 1);
        // ||t||_n = |r - 1| / 2^n  where  r = 2^n t mod 2.
        let two = Rat::from_integer(Int::from(2));
        let scaled = &self.r * Rat::from_integer(Int::one() << n);
        let r = &scaled - (&scaled / &two).floor() * &two;
        (r - Rat::one()).abs() / Rat::from_integer(Int::one() << n)
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.r.numer(), self.r.denom())
    }
}

impl fmt::Debug for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Angle({})", self)
    }
}

impl FromStr for Angle {
    type Err = AngleParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse_int =
            |x: &str| Int::from_str(x.trim()).map_err(|_| AngleParseError::Malformed(s.into()));
        let (num, den) = match s.split_once('/') {
            Some((n, d)) => (parse_int(n)?, parse_int(d)?),
            None => (parse_int(s)?, Int::one()),
        };
        if den.is_zero() {
            return Err(AngleParseError::ZeroDenominator);
        }
        Ok(Angle::from_rat(Rat::new(num, den)))
    }
}

impl Serialize for Angle {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Result of [`Angle::orbit_cycle`].
#[derive(Debug, Clone)]
pub struct OrbitCycle {
    pub preperiod: usize,
    pub period: usize,
    pub orbit: Vec<Angle>,
}

/// A finite word over `{0, 1}`.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BinaryWord {
    bits: Vec<bool>,
}

impl BinaryWord {
    pub fn new(bits: Vec<bool>) -> Self {
        BinaryWord { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bit(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn push(&mut self, b: bool) {
        self.bits.push(b);
    }

    /// Bitwise complement.
    pub fn complement(&self) -> Self {
        BinaryWord {
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    /// The word as an integer, most significant bit first.
    pub fn as_int(&self) -> Int {
        let mut acc = Int::zero();
        for &b in &self.bits {
            acc <<= 1;
            if b {
                acc += 1;
            }
        }
        acc
    }

    /// Exact value of `0.w` with the chosen infinite tail.
    pub fn as_angle(&self, tail: DyadicTail) -> Angle {
        let den = Int::one() << self.len();
        let num = match tail {
            DyadicTail::Zeros => self.as_int(),
            DyadicTail::Ones => self.as_int() + 1,
        };
        Angle::from_rat(Rat::new(num, den))
    }

    /// Exact value of the eventually periodic expansion
    /// `0.prefix (block)^inf` where this word is `prefix ++ block`.
    pub fn as_angle_with_period(&self, block_len: usize) -> Angle {
        assert!(block_len >= 1 && block_len <= self.len());
        let pre_len = self.len() - block_len;
        let pre = BinaryWord::new(self.bits[..pre_len].to_vec()).as_int();
        let block = BinaryWord::new(self.bits[pre_len..].to_vec()).as_int();
        let m = (Int::one() << block_len) - 1;
        let num = pre * &m + block;
        let den = (Int::one() << pre_len) * m;
        Angle::from_rat(Rat::new(num, den))
    }

    pub fn to_f64(&self) -> f64 {
        let mut acc = 0.0;
        let mut w = 0.5;
        for &b in &self.bits {
            if b {
                acc += w;
            }
            w *= 0.5;
        }
        acc
    }

    /// Drops the leading bit: the doubling map on truncated expansions.
    pub fn shift_left(&self) -> Self {
        BinaryWord {
            bits: self.bits[1..].to_vec(),
        }
    }
}

impl fmt::Display for BinaryWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            write!(f, "{}", if b { '1' } else { '0' })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BinaryWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BinaryWord({})", self)
    }
}

impl FromStr for BinaryWord {
    type Err = AngleParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut bits = Vec::with_capacity(s.len());
        for ch in s.chars() {
            match ch {
                '0' => bits.push(false),
                '1' => bits.push(true),
                _ => return Err(AngleParseError::Malformed(s.into())),
            }
        }
        Ok(BinaryWord { bits })
    }
}

impl Serialize for BinaryWord {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;

    fn a(n: i64, d: i64) -> Angle {
        Angle::new(n, d)
    }

    #[test]
    fn doubling_basics() {
        assert_eq!(a(0, 1).double(), a(0, 1));
        assert_eq!(a(1, 3).double(), a(2, 3));
        assert_eq!(a(5, 6).double(), a(2, 3));
    }

    #[test]
    fn doubling_divides_denominator() {
        for num in 0..60i64 {
            for den in 1..60i64 {
                let t = a(num, den);
                let d = t.double();
                assert!(t.denom().is_multiple_of(d.denom()));
            }
        }
    }

    #[test]
    fn orbit_cycles() {
        let oc = a(1, 3).orbit_cycle();
        assert_eq!((oc.preperiod, oc.period), (0, 2));
        assert_eq!(oc.orbit, vec![a(1, 3), a(2, 3)]);

        let oc = a(1, 4).orbit_cycle();
        assert_eq!((oc.preperiod, oc.period), (2, 1));
        assert_eq!(oc.orbit, vec![a(1, 4), a(1, 2), a(0, 1)]);

        let oc = a(3, 7).orbit_cycle();
        assert_eq!((oc.preperiod, oc.period), (0, 3));
        assert_eq!(oc.orbit, vec![a(3, 7), a(6, 7), a(5, 7)]);
    }

    #[test]
    fn orbit_elements_distinct_and_close_up() {
        for num in 0..80i64 {
            for den in 1..80i64 {
                let t = a(num, den);
                let oc = t.orbit_cycle();
                for i in 0..oc.orbit.len() {
                    for j in 0..i {
                        assert_ne!(oc.orbit[i], oc.orbit[j], "t={}", t);
                    }
                }
                let next = oc.orbit.last().unwrap().double();
                assert_eq!(next, oc.orbit[oc.preperiod], "t={}", t);
            }
        }
    }

    #[test]
    fn pure_periodicity_iff_odd_denominator() {
        for num in 0..=1000i64 {
            for den in (num.max(1))..=1000i64 {
                if num.gcd(&den) != 1 {
                    continue;
                }
                let t = a(num, den);
                let odd = t.denom().is_odd();
                assert_eq!(t.orbit_cycle().preperiod == 0, odd, "t={}", t);
            }
        }
    }

    #[test]
    fn binary_expansions() {
        assert_eq!(
            a(1, 3).binary_expansion(6, DyadicTail::Zeros).to_string(),
            "010101"
        );
        assert_eq!(
            a(1, 2).binary_expansion(4, DyadicTail::Zeros).to_string(),
            "1000"
        );
        assert_eq!(
            a(1, 2).binary_expansion(4, DyadicTail::Ones).to_string(),
            "0111"
        );
        assert_eq!(
            a(15, 31).binary_expansion(10, DyadicTail::Zeros).to_string(),
            "0111101111"
        );
        assert_eq!(
            a(0, 1).binary_expansion(5, DyadicTail::Ones).to_string(),
            "11111"
        );
    }

    #[test]
    fn expansion_shift_is_doubling() {
        for num in 0..40i64 {
            for den in 1..=40i64 {
                let t = a(num, den);
                let n = 30;
                let w = t.binary_expansion(n, DyadicTail::Zeros);
                let dw = t.double().binary_expansion(n - 1, DyadicTail::Zeros);
                assert_eq!(w.shift_left().bits(), dw.bits(), "t={}", t);
            }
        }
    }

    #[test]
    fn dyadic_distances() {
        assert_eq!(a(1, 2).dyadic_distance(1), rat(0, 1));
        for n in 1..=8 {
            assert_eq!(a(0, 1).dyadic_distance(n), rat(1, 1 << n));
        }
        assert_eq!(a(1, 3).dyadic_distance(2), rat(1, 12));
    }

    #[test]
    fn dyadic_distance_bound_and_equality_cases() {
        for num in 0..=200i64 {
            for den in 1..=200i64 {
                let t = a(num, den);
                for n in 1..=6u64 {
                    let d = t.dyadic_distance(n);
                    assert!(d <= rat(1, 1 << n));
                    // Equality exactly at multiples of 2^-(n-1): the points
                    // half a cell away from every generation-n dyadic.
                    let at_max = (t.as_rat() * Rat::from_integer(Int::one() << (n - 1)))
                        .is_integer();
                    assert_eq!(d == rat(1, 1 << n), at_max, "t={} n={}", t, n);
                }
            }
        }
    }

    #[test]
    fn complement_involution() {
        assert_eq!(a(0, 1).complement(), a(0, 1));
        assert_eq!(a(15, 31).complement(), a(16, 31));
        for num in 0..50i64 {
            for den in 1..50i64 {
                let t = a(num, den);
                assert_eq!(t.complement().complement(), t);
            }
        }
    }

    #[test]
    fn word_round_trips() {
        let t = a(5, 12);
        let w = t.binary_expansion(40, DyadicTail::Zeros);
        let back = w.as_angle_with_period(t.bit_period() as usize);
        assert_eq!(back, t);
        // dyadic reconstruction from both tails
        let d = a(3, 16);
        assert_eq!(
            d.binary_expansion(6, DyadicTail::Zeros).as_angle(DyadicTail::Zeros),
            d
        );
        assert_eq!(
            d.binary_expansion(6, DyadicTail::Ones).as_angle(DyadicTail::Ones),
            d
        );
    }

    #[test]
    fn parse_display() {
        let t: Angle = "15/31".parse().unwrap();
        assert_eq!(t, a(15, 31));
        assert_eq!(t.to_string(), "15/31");
        assert_eq!("7/3".parse::<Angle>().unwrap(), a(1, 3));
        assert!("1/0".parse::<Angle>().is_err());
        assert!("x/2".parse::<Angle>().is_err());
    }
}
