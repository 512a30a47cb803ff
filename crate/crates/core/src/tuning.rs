//! The tuning action on external angles: block substitution of binary
//! expansions by a component's root-ray words, the inverse staircase, and
//! dimension diagnostics for tuned angle sets.

use std::collections::HashMap;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::angle::{Angle, BinaryWord, DyadicTail};
use crate::realslice::{boxcount_dimension, cover_r, BoxCount, IntervalSet, Opening};
use crate::{Int, Rat};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TuningError {
    #[error("the period-1 component is the tuning identity; words need period >= 2")]
    PeriodOne,
    #[error("words must have equal positive length")]
    MismatchedWords,
    #[error("input angle outside [theta_minus, theta_plus]")]
    OutOfRange,
    #[error("depth must be at least 4 periods")]
    DepthTooShallow,
}

/// The pair of period-length words driving the angle substitution: the
/// repetends of the two root-ray angles of a hyperbolic component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TuningWords {
    p: u32,
    theta0: BinaryWord,
    theta1: BinaryWord,
}

/// Image of an angle under the substitution: dyadic rationals have two
/// distinct images, one per binary expansion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TuneImage {
    Single(Angle),
    Pair {
        /// Image of the terminating (zeros-tail) expansion; the larger one.
        zeros_tail: Angle,
        /// Image of the co-terminating (ones-tail) expansion; the smaller.
        ones_tail: Angle,
    },
}

impl TuneImage {
    pub fn branch(&self, tail: DyadicTail) -> &Angle {
        match self {
            TuneImage::Single(a) => a,
            TuneImage::Pair {
                zeros_tail,
                ones_tail,
            } => match tail {
                DyadicTail::Zeros => zeros_tail,
                DyadicTail::Ones => ones_tail,
            },
        }
    }

    pub fn min(&self) -> &Angle {
        self.branch(DyadicTail::Ones)
    }

    pub fn max(&self) -> &Angle {
        self.branch(DyadicTail::Zeros)
    }
}

/// Result of the staircase inverse: either the exact preimage or the dyadic
/// label of the gap the input fell into.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PsiValue {
    /// In `[0, 1]`; kept as a plain rational because the right endpoint
    /// maps to 1, not to 0 (mod 1).
    pub value: Rat,
    pub on_gap: bool,
}

/// Extracts the substitution words from a real component's opening: the
/// p-bit repetend of the root angle and its bitwise complement.
pub fn words_from_opening(o: &Opening) -> Result<TuningWords, TuningError> {
    if o.p < 2 {
        return Err(TuningError::PeriodOne);
    }
    let theta0 = o.theta_minus.binary_expansion(o.p as usize, DyadicTail::Zeros);
    let theta1 = theta0.complement();
    Ok(TuningWords {
        p: o.p,
        theta0,
        theta1,
    })
}

impl TuningWords {
    /// Raw constructor for arbitrary word pairs (complex components); real
    /// components always have complementary words.
    pub fn raw(theta0: BinaryWord, theta1: BinaryWord) -> Result<Self, TuningError> {
        if theta0.len() != theta1.len() || theta0.is_empty() {
            return Err(TuningError::MismatchedWords);
        }
        if theta0.len() < 2 {
            return Err(TuningError::PeriodOne);
        }
        Ok(TuningWords {
            p: theta0.len() as u32,
            theta0,
            theta1,
        })
    }

    pub fn period(&self) -> u32 {
        self.p
    }

    pub fn theta0(&self) -> &BinaryWord {
        &self.theta0
    }

    pub fn theta1(&self) -> &BinaryWord {
        &self.theta1
    }

    /// `0.overline(theta0)`: the root angle.
    pub fn theta_minus(&self) -> Angle {
        Angle::from_rat(Rat::new(self.theta0.as_int(), (Int::one() << self.p) - 1))
    }

    /// `0.overline(theta1)`.
    pub fn theta_plus(&self) -> Angle {
        Angle::from_rat(Rat::new(self.theta1.as_int(), (Int::one() << self.p) - 1))
    }

    fn word_for(&self, bit: bool) -> &BinaryWord {
        if bit {
            &self.theta1
        } else {
            &self.theta0
        }
    }

    /// Substitutes every bit of the expansion `bits` by its word.
    fn image_int(&self, bits: &[bool]) -> Int {
        let mut acc = Int::zero();
        for &b in bits {
            acc <<= self.p;
            acc += self.word_for(b).as_int();
        }
        acc
    }

    /// Image of an angle under the substitution. Rational in, rational out:
    /// eventually periodic expansions map to eventually periodic ones.
    pub fn tune_angle(&self, t: &Angle) -> TuneImage {
        if t.is_dyadic() {
            let k = t.bit_preperiod() as usize;
            let zeros = {
                let bits = t.binary_expansion(k, DyadicTail::Zeros);
                self.periodic_image(bits.bits(), &[false])
            };
            let ones = {
                let bits = t.binary_expansion(k, DyadicTail::Ones);
                self.periodic_image(bits.bits(), &[true])
            };
            TuneImage::Pair {
                zeros_tail: zeros,
                ones_tail: ones,
            }
        } else {
            let a = t.bit_preperiod() as usize;
            let m = t.bit_period() as usize;
            let bits = t.binary_expansion(a + m, DyadicTail::Zeros);
            TuneImage::Single(self.periodic_image(&bits.bits()[..a], &bits.bits()[a..]))
        }
    }

    /// Exact value of `0.(prefix blocks)(repeating blocks)^inf`.
    fn periodic_image(&self, prefix: &[bool], block: &[bool]) -> Angle {
        let p = self.p as usize;
        let pre = self.image_int(prefix);
        let blk = self.image_int(block);
        let m = (Int::one() << (p * block.len())) - 1;
        let num = pre * &m + blk;
        let den = (Int::one() << (p * prefix.len())) * m;
        Angle::from_rat(Rat::new(num, den))
    }

    /// The affine contraction prepending one word: `t -> 0.theta_b t`.
    pub fn contraction(&self, bit: bool, t: &Angle) -> Angle {
        let num = self.word_for(bit).as_int();
        Angle::from_rat(
            (Rat::from_integer(num) + t.as_rat()) / Rat::from_integer(Int::one() << self.p),
        )
    }

    /// `0.theta0 (theta1)^inf`: the supremum of images starting with word 0.
    fn sup_block0(&self) -> Rat {
        let m = (Int::one() << self.p) - 1;
        Rat::new(
            self.theta0.as_int() * &m + self.theta1.as_int(),
            (Int::one() << self.p) * m,
        )
    }

    /// `0.theta1 (theta0)^inf`: the infimum of images starting with word 1.
    fn inf_block1(&self) -> Rat {
        let m = (Int::one() << self.p) - 1;
        Rat::new(
            self.theta1.as_int() * &m + self.theta0.as_int(),
            (Int::one() << self.p) * m,
        )
    }

    /// Monotone staircase inverse: decodes the image greedily block by
    /// block; inputs falling in a gap of the invariant set map to the gap's
    /// dyadic label.
    pub fn staircase_psi(&self, s: &Angle) -> Result<PsiValue, TuningError> {
        let lo = self.theta_minus();
        let hi_angle = self.theta_plus();
        if *s < lo || *s > hi_angle {
            return Err(TuningError::OutOfRange);
        }
        let sup0 = self.sup_block0();
        let inf1 = self.inf_block1();
        let scale = Rat::from_integer(Int::one() << self.p);
        let mut r = s.as_rat().clone();
        let mut bits: Vec<bool> = Vec::new();
        let mut seen: HashMap<Rat, usize> = HashMap::new();
        loop {
            if let Some(&j) = seen.get(&r) {
                // eventually periodic decoding: exact rational value
                let blk_len = bits.len() - j;
                let pre = BinaryWord::new(bits[..j].to_vec()).as_int();
                let blk = BinaryWord::new(bits[j..].to_vec()).as_int();
                let m = (Int::one() << blk_len) - 1;
                let value = Rat::new(pre * &m + blk, (Int::one() << j) * m);
                return Ok(PsiValue {
                    value,
                    on_gap: false,
                });
            }
            seen.insert(r.clone(), bits.len());
            if r <= sup0 {
                bits.push(false);
                r = r * &scale - Rat::from_integer(self.theta0.as_int());
            } else if r >= inf1 {
                bits.push(true);
                r = r * &scale - Rat::from_integer(self.theta1.as_int());
            } else {
                // gap: label it by the dyadic 0.bits 1
                let value = Rat::new(
                    BinaryWord::new(bits.clone()).as_int() * 2 + 1,
                    Int::one() << (bits.len() + 1),
                );
                return Ok(PsiValue {
                    value,
                    on_gap: true,
                });
            }
        }
    }

    /// Level-`m` cylinder intervals of the invariant set: for every m-block
    /// word, the span of its images.
    pub fn cylinders(&self, m: usize) -> IntervalSet {
        assert!(m >= 1 && m <= 20);
        let theta_minus = self.theta_minus().as_rat().clone();
        let theta_plus = self.theta_plus().as_rat().clone();
        let span = Rat::from_integer(Int::one() << (self.p as usize * m));
        let mut out = Vec::with_capacity(1 << m);
        for word in 0u64..(1u64 << m) {
            let bits: Vec<bool> = (0..m).map(|i| (word >> (m - 1 - i)) & 1 == 1).collect();
            let base = Rat::from_integer(self.image_int(&bits));
            let lo = (&base + &theta_minus) / &span;
            let hi = (&base + &theta_plus) / &span;
            out.push((lo, hi));
        }
        IntervalSet::new(out)
    }

    /// Box-count slope of the depth-truncated invariant set; the expected
    /// value is `1/period` for this strictly self-similar construction.
    pub fn cantor_boxdim(&self, depth: u32) -> Result<BoxCount, TuningError> {
        let p = self.p;
        if depth < 4 * p {
            return Err(TuningError::DepthTooShallow);
        }
        let m = (depth / p).min(16) as usize;
        let set = self.cylinders(m);
        // sample scales at multiples of the period: the staircase in the
        // cell counts cancels and the fit is clean
        let scales: Vec<u32> = (2..m as u32).map(|j| j * p).collect();
        boxcount_dimension(&set, &scales).map_err(|_| TuningError::DepthTooShallow)
    }

    /// Image of the exact cover of the real-ray angle set: an interval cover
    /// of the tuned copy's angles inside `[theta_minus, theta_plus]`.
    ///
    /// Degenerate cover intervals map to their branch images; non-degenerate
    /// ones to the span between the smallest image of the left endpoint and
    /// the largest image of the right endpoint.
    pub fn tuned_r_cover(&self, max_period: u32) -> IntervalSet {
        let cover = cover_r(max_period);
        let mut out: Vec<(Rat, Rat)> = Vec::new();
        for (a, b) in cover.intervals() {
            let aa = Angle::from_rat(a.clone());
            let bb = Angle::from_rat(b.clone());
            if a == b {
                match self.tune_angle(&aa) {
                    TuneImage::Single(x) => out.push((x.as_rat().clone(), x.as_rat().clone())),
                    TuneImage::Pair {
                        zeros_tail,
                        ones_tail,
                    } => {
                        out.push((ones_tail.as_rat().clone(), ones_tail.as_rat().clone()));
                        out.push((zeros_tail.as_rat().clone(), zeros_tail.as_rat().clone()));
                    }
                }
            } else {
                let lo = self.tune_angle(&aa).min().as_rat().clone();
                let hi = self.tune_angle(&bb).max().as_rat().clone();
                out.push((lo, hi));
            }
        }
        IntervalSet::new(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;
    use num_traits::ToPrimitive;
    use crate::realslice::enumerate_openings;

    fn words(p: u32) -> TuningWords {
        let o = enumerate_openings(p)
            .into_iter()
            .filter(|o| o.p == p)
            .next()
            .unwrap();
        words_from_opening(&o).unwrap()
    }

    fn basilica() -> TuningWords {
        words(2)
    }

    #[test]
    fn words_from_openings() {
        let w = basilica();
        assert_eq!(w.theta0().to_string(), "01");
        assert_eq!(w.theta1().to_string(), "10");

        let w3 = words(3);
        assert_eq!(w3.theta0().to_string(), "011");
        assert_eq!(w3.theta1().to_string(), "100");

        let openings = enumerate_openings(5);
        let o5 = openings.iter().find(|o| o.p == 5 && o.n == 15).unwrap();
        let w5 = words_from_opening(o5).unwrap();
        assert_eq!(w5.theta0().to_string(), "01111");
        assert_eq!(w5.theta1().to_string(), "10000");

        let o1 = enumerate_openings(1).pop().unwrap();
        assert_eq!(words_from_opening(&o1), Err(TuningError::PeriodOne));
    }

    #[test]
    fn tuning_examples() {
        let w = basilica();
        // all-zeros word gives the root angle
        match w.tune_angle(&Angle::zero()) {
            TuneImage::Pair {
                zeros_tail,
                ones_tail,
            } => {
                assert_eq!(zeros_tail, Angle::new(1, 3));
                assert_eq!(ones_tail, Angle::new(2, 3));
            }
            _ => panic!("0 is dyadic"),
        }
        assert_eq!(
            w.tune_angle(&Angle::new(1, 3)),
            TuneImage::Single(Angle::new(2, 5))
        );
        match w.tune_angle(&Angle::half()) {
            TuneImage::Pair {
                zeros_tail,
                ones_tail,
            } => {
                assert_eq!(zeros_tail, Angle::new(7, 12));
                assert_eq!(ones_tail, Angle::new(5, 12));
            }
            _ => panic!("1/2 is dyadic"),
        }
    }

    #[test]
    fn tuning_is_increasing() {
        let w = words(3);
        let mut last: Option<Angle> = None;
        for k in 0..=120i64 {
            let t = Angle::from_rat(rat(k, 121));
            if t.is_dyadic() {
                continue;
            }
            let img = match w.tune_angle(&t) {
                TuneImage::Single(x) => x,
                _ => unreachable!(),
            };
            if let Some(prev) = &last {
                assert!(*prev < img);
            }
            last = Some(img);
        }
    }

    #[test]
    fn contraction_identity() {
        for w in [basilica(), words(3), words(4)] {
            for k in 1..40i64 {
                let t = Angle::from_rat(rat(k, 41));
                let img = match w.tune_angle(&t) {
                    TuneImage::Single(x) => x,
                    _ => unreachable!(),
                };
                let shifted = match w.tune_angle(&t.double()) {
                    TuneImage::Single(x) => x,
                    _ => unreachable!(),
                };
                let b = *t.as_rat() >= rat(1, 2);
                assert_eq!(img, w.contraction(b, &shifted), "t={}", t);
            }
        }
    }

    #[test]
    fn staircase_inverts_tuning() {
        for w in [basilica(), words(3)] {
            for den in [7i64, 9, 31, 100, 257] {
                for num in 0..den.min(40) {
                    let t = Angle::new(num, den);
                    match w.tune_angle(&t) {
                        TuneImage::Single(s) => {
                            let back = w.staircase_psi(&s).unwrap();
                            assert!(!back.on_gap);
                            assert_eq!(Angle::from_rat(back.value), t, "t={}", t);
                        }
                        TuneImage::Pair {
                            zeros_tail,
                            ones_tail,
                        } => {
                            for s in [zeros_tail, ones_tail] {
                                let back = w.staircase_psi(&s).unwrap();
                                assert!(!back.on_gap);
                                assert_eq!(Angle::from_rat(back.value), t, "t={}", t);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn staircase_endpoints_and_gaps() {
        let w = basilica();
        let lo = w.staircase_psi(&w.theta_minus()).unwrap();
        assert_eq!(lo.value, rat(0, 1));
        let hi = w.staircase_psi(&w.theta_plus()).unwrap();
        assert_eq!(hi.value, rat(1, 1));

        assert_eq!(
            w.staircase_psi(&Angle::new(2, 5)).unwrap().value,
            rat(1, 3)
        );
        // anything in the central gap maps to 1/2
        for s in [Angle::new(43, 100), Angle::half(), Angle::new(14, 25)] {
            let v = w.staircase_psi(&s).unwrap();
            assert!(v.on_gap);
            assert_eq!(v.value, rat(1, 2), "s={}", s);
        }
        assert_eq!(
            w.staircase_psi(&Angle::new(1, 5)),
            Err(TuningError::OutOfRange)
        );
    }

    #[test]
    fn staircase_monotone() {
        let w = words(3);
        let lo = w.theta_minus().as_rat().clone();
        let hi = w.theta_plus().as_rat().clone();
        let mut prev = rat(-1, 1);
        for k in 0..=300 {
            let s = Angle::from_rat(&lo + (&hi - &lo) * rat(k, 300));
            let v = w.staircase_psi(&s).unwrap();
            assert!(v.value >= prev, "not monotone at k={}", k);
            prev = v.value;
        }
    }

    #[test]
    fn cantor_slopes() {
        for (p, expect) in [(2u32, 0.5f64), (3, 1.0 / 3.0), (5, 0.2)] {
            let w = words(p);
            let bc = w.cantor_boxdim(12 * p).unwrap();
            assert!(
                (bc.slope - expect).abs() < 0.02,
                "p={} slope={}",
                p,
                bc.slope
            );
        }
    }

    #[test]
    fn tuned_cover_basics() {
        let w = basilica();
        let cov = w.tuned_r_cover(3);
        // endpoints from the spec pattern: images of the cover endpoints
        let pts: Vec<Rat> = cov
            .intervals()
            .iter()
            .flat_map(|(a, b)| [a.clone(), b.clone()])
            .collect();
        for needle in [rat(1, 3), rat(2, 5), rat(2, 3)] {
            assert!(pts.contains(&needle), "missing {}", needle);
        }
        // cover lies inside [theta_minus, theta_plus]
        let lo = w.theta_minus().as_rat().clone();
        let hi = w.theta_plus().as_rat().clone();
        for (a, b) in cov.intervals() {
            assert!(*a >= lo && *b <= hi);
        }
    }

    #[test]
    fn holder_inequality_sampled() {
        let w = basilica();
        let lo = w.theta_minus().as_rat().clone();
        let hi = w.theta_plus().as_rat().clone();
        let exponent = 1.0 / w.period() as f64;
        let mut worst = 0.0f64;
        for i in 0..200 {
            for j in (i + 1)..200.min(i + 20) {
                let a = &lo + (&hi - &lo) * rat(i, 200);
                let b = &lo + (&hi - &lo) * rat(j, 200);
                let pa = w.staircase_psi(&Angle::from_rat(a.clone())).unwrap().value;
                let pb = w.staircase_psi(&Angle::from_rat(b.clone())).unwrap().value;
                let dy = (&pb - &pa).to_f64().unwrap();
                let dx = (&b - &a).to_f64().unwrap();
                if dy > 0.0 {
                    worst = worst.max(dy / dx.powf(exponent));
                }
            }
        }
        // one global constant bounds all sampled increments
        assert!(worst.is_finite() && worst < 4.0, "C={}", worst);
    }
}
