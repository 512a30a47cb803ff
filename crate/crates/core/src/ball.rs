//! Fixed-point ball arithmetic: arbitrary-precision dyadic centers with
//! rigorous error radii, sized for certified real quadratic orbits.
//!
//! A `Ball` encloses a real number in `[(m - r) / 2^prec, (m + r) / 2^prec]`.
//! Every operation produces an enclosure of the image of its input
//! enclosures, so containment statements proved on balls hold for the exact
//! orbit.

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::{Int, Rat};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ball {
    m: Int,
    r: Int,
    prec: u32,
}

impl Ball {
    /// Exact dyadic enclosure of a rational (radius 1 ulp when the
    /// denominator does not divide `2^prec`).
    pub fn from_rat(q: &Rat, prec: u32) -> Self {
        let num = q.numer() << prec;
        let (quot, rem) = num.div_rem(q.denom());
        if rem.is_zero() {
            Ball {
                m: quot,
                r: Int::zero(),
                prec,
            }
        } else {
            Ball {
                m: quot,
                r: Int::one(),
                prec,
            }
        }
    }

    pub fn exact_int(v: i64, prec: u32) -> Self {
        Ball {
            m: Int::from(v) << prec,
            r: Int::zero(),
            prec,
        }
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn center(&self) -> &Int {
        &self.m
    }

    pub fn radius(&self) -> &Int {
        &self.r
    }

    pub fn to_f64(&self) -> f64 {
        big_to_f64_scaled(&self.m, self.prec)
    }

    pub fn radius_f64(&self) -> f64 {
        big_to_f64_scaled(&self.r, self.prec)
    }

    /// Lower bound of the enclosure as an exact rational.
    pub fn lower(&self) -> Rat {
        Rat::new(&self.m - &self.r, Int::one() << self.prec)
    }

    pub fn upper(&self) -> Rat {
        Rat::new(&self.m + &self.r, Int::one() << self.prec)
    }

    /// Certified sign: `Some(1)` when strictly positive, `Some(-1)` when
    /// strictly negative, `None` when the enclosure straddles zero.
    pub fn signum_certified(&self) -> Option<i8> {
        if self.m > self.r {
            Some(1)
        } else if self.m < -self.r.clone() {
            Some(-1)
        } else {
            None
        }
    }

    /// Certified lower bound on `|x|` (0 when the sign is uncertified).
    pub fn abs_lower_f64(&self) -> f64 {
        let v = self.m.abs() - &self.r;
        if v.is_negative() {
            0.0
        } else {
            big_to_f64_scaled(&v, self.prec)
        }
    }

    /// True when every point of `other` lies strictly inside `self`.
    pub fn contains_strict(&self, other: &Ball) -> bool {
        assert_eq!(self.prec, other.prec);
        let self_lo = &self.m - &self.r;
        let self_hi = &self.m + &self.r;
        let other_lo = &other.m - &other.r;
        let other_hi = &other.m + &other.r;
        self_lo < other_lo && other_hi < self_hi
    }

    /// Certified `|x| > bound` for an integer bound.
    pub fn abs_exceeds(&self, bound: i64) -> bool {
        let b = Int::from(bound) << self.prec;
        self.m.abs() - &self.r > b
    }

    /// `x^2 + c`, enclosing rounding and input radii. `c` must share the
    /// precision.
    pub fn square_add(&self, c: &Ball) -> Ball {
        assert_eq!(self.prec, c.prec);
        let prec = self.prec;
        let m2 = (&self.m * &self.m) >> prec;
        // |x^2 - m^2/S| <= (2|m| r + r^2)/S, plus 1 ulp for the shift
        let err = (Int::from(2) * self.m.abs() * &self.r + &self.r * &self.r) >> prec;
        Ball {
            m: m2 + &c.m,
            r: err + Int::from(2) + &c.r,
            prec,
        }
    }

    /// Plain product with enclosure.
    pub fn mul(&self, other: &Ball) -> Ball {
        assert_eq!(self.prec, other.prec);
        let prec = self.prec;
        let m = (&self.m * &other.m) >> prec;
        let err = (self.m.abs() * &other.r + other.m.abs() * &self.r + &self.r * &other.r) >> prec;
        Ball {
            m,
            r: err + Int::from(2),
            prec,
        }
    }

    pub fn add(&self, other: &Ball) -> Ball {
        assert_eq!(self.prec, other.prec);
        Ball {
            m: &self.m + &other.m,
            r: &self.r + &other.r,
            prec: self.prec,
        }
    }

    pub fn sub(&self, other: &Ball) -> Ball {
        assert_eq!(self.prec, other.prec);
        Ball {
            m: &self.m - &other.m,
            r: &self.r + &other.r,
            prec: self.prec,
        }
    }

    pub fn neg(&self) -> Ball {
        Ball {
            m: -self.m.clone(),
            r: self.r.clone(),
            prec: self.prec,
        }
    }

    pub fn mul_i64(&self, k: i64) -> Ball {
        Ball {
            m: &self.m * k,
            r: &self.r * k.abs(),
            prec: self.prec,
        }
    }

    /// Quotient enclosure; `None` when the divisor's enclosure meets zero.
    pub fn div(&self, other: &Ball) -> Option<Ball> {
        assert_eq!(self.prec, other.prec);
        if other.signum_certified().is_none() {
            return None;
        }
        let prec = self.prec;
        let m = (&self.m << prec) / &other.m;
        // |a/b - m1/m2| <= (r1 |m2| + r2 |m1|) / (|m2| (|m2| - r2))
        let am2 = other.m.abs();
        let num = (&self.r * &am2 + &other.r * self.m.abs()) << prec;
        let den = &am2 * (&am2 - &other.r);
        let err = num / den;
        Some(Ball {
            m,
            r: err + Int::from(2),
            prec,
        })
    }

    /// Forget the radius: the center as an exact ball (used by plain Newton
    /// iterations where rigor comes from a final residual check).
    pub fn discard_radius(mut self) -> Ball {
        self.r = Int::zero();
        self
    }

    /// Smallest ball containing both inputs.
    pub fn hull(a: &Ball, b: &Ball) -> Ball {
        assert_eq!(a.prec, b.prec);
        let lo = (&a.m - &a.r).min(&b.m - &b.r);
        let hi = (&a.m + &a.r).max(&b.m + &b.r);
        let m = (&lo + &hi) >> 1;
        let r = &hi - &m;
        Ball {
            m,
            r,
            prec: a.prec,
        }
    }

    /// Radius enlarged by a relative share (`r >> rel_shift`) plus a fixed
    /// number of ulps.
    pub fn inflate(&self, rel_shift: u32, extra_ulps: u64) -> Ball {
        Ball {
            m: self.m.clone(),
            r: &self.r + (&self.r >> rel_shift) + Int::from(extra_ulps),
            prec: self.prec,
        }
    }

    /// Center and radius scaled down to a 53-bit window, for cheap
    /// proximity screening that stays meaningful at any precision.
    pub fn approx53(&self) -> (f64, f64) {
        let shift = self.prec.saturating_sub(53);
        let c = (&self.m >> shift).to_f64().unwrap_or(f64::NAN);
        let r = (&self.r >> shift).to_f64().unwrap_or(f64::NAN);
        (c, r)
    }

    /// Rescale to a new working precision (radius rounds up).
    pub fn with_prec(&self, prec: u32) -> Ball {
        if prec == self.prec {
            return self.clone();
        }
        if prec > self.prec {
            let s = prec - self.prec;
            Ball {
                m: &self.m << s,
                r: &self.r << s,
                prec,
            }
        } else {
            let s = self.prec - prec;
            Ball {
                m: &self.m >> s,
                r: (&self.r >> s) + 2,
                prec,
            }
        }
    }
}

pub(crate) fn big_to_f64_scaled(v: &Int, prec: u32) -> f64 {
    v.to_f64().map(|x| x / 2f64.powi(prec as i32)).unwrap_or_else(|| {
        // fall back through a rational for extreme magnitudes
        Rat::new(v.clone(), Int::one() << prec)
            .to_f64()
            .unwrap_or(f64::NAN)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;

    #[test]
    fn exactness_of_dyadics() {
        let b = Ball::from_rat(&rat(-7, 4), 64);
        assert!(b.radius().is_zero());
        assert_eq!(b.to_f64(), -1.75);
        let b = Ball::from_rat(&rat(1, 3), 64);
        assert_eq!(b.radius(), &Int::one());
    }

    #[test]
    fn enclosure_of_orbit_step() {
        // x^2 + c evaluated on enclosures contains the exact rational value
        let prec = 96;
        let c = rat(-13, 8);
        let cb = Ball::from_rat(&c, prec);
        let mut xb = cb.clone();
        let mut xq = c.clone();
        for _ in 0..24 {
            xb = xb.square_add(&cb);
            xq = &xq * &xq + &c;
            assert!(xb.lower() <= xq && xq <= xb.upper());
        }
    }

    #[test]
    fn certified_signs() {
        let prec = 32;
        assert_eq!(Ball::from_rat(&rat(1, 5), prec).signum_certified(), Some(1));
        assert_eq!(
            Ball::from_rat(&rat(-1, 5), prec).signum_certified(),
            Some(-1)
        );
        let tiny = Ball {
            m: Int::from(1),
            r: Int::from(3),
            prec,
        };
        assert_eq!(tiny.signum_certified(), None);
    }

    #[test]
    fn division_encloses() {
        let prec = 80;
        let a = Ball::from_rat(&rat(22, 7), prec);
        let b = Ball::from_rat(&rat(-3, 5), prec);
        let q = a.div(&b).unwrap();
        let exact = rat(22, 7) / rat(-3, 5);
        assert!(q.lower() <= exact && exact <= q.upper());
        let zeroish = Ball {
            m: Int::from(1),
            r: Int::from(5),
            prec,
        };
        assert!(a.div(&zeroish).is_none());
    }

    #[test]
    fn precision_rescale() {
        let b = Ball::from_rat(&rat(5, 3), 40);
        let up = b.with_prec(100);
        let down = up.with_prec(24);
        let exact = rat(5, 3);
        for x in [&up, &down] {
            assert!(x.lower() <= exact && exact <= x.upper());
        }
    }
}
