//! Angles of rays landing on the invariant interval of a real quadratic:
//! exact membership tests, the cascade-limit angle function, and the
//! dimension bounds for biaccessible angle sets they control.

use num_traits::{Signed, ToPrimitive};
use serde::Serialize;
use thiserror::Error;

use crate::angle::{Angle, BinaryWord};
use crate::kneading::{pi, tau, KneadError, RealParam};
use crate::ksigma::{boxdim_estimate, dim_lower_bound, SigmaParam};
use crate::realslice::{enumerate_openings, Opening};
use crate::tuning::{words_from_opening, TuningWords};
use crate::{Int, Rat};

#[derive(Debug, Error)]
pub enum BiaccessError {
    #[error("tau_c must lie in [0, 1/2]")]
    TauOutOfRange,
    #[error("parameter lies within tolerance of a component boundary")]
    UnresolvedLocation,
    #[error(transparent)]
    Knead(#[from] KneadError),
}

// ---------------------------------------------------------------------------
// Membership in the spine-landing angle set
// ---------------------------------------------------------------------------

/// Exact membership: no forward doubling iterate of `t` enters the open
/// interval `]tau_c, 1 - tau_c[`. For `tau_c = 1/2` the interval is empty
/// and every angle is accepted.
pub fn s_c_membership(t: &Angle, tau_c: &Angle) -> Result<bool, BiaccessError> {
    if *tau_c > Angle::half() {
        return Err(BiaccessError::TauOutOfRange);
    }
    if let (Some(a), Some(b), Some(x), Some(y)) = (
        t.numer().to_u64(),
        t.denom().to_u64(),
        tau_c.numer().to_u64(),
        tau_c.denom().to_u64(),
    ) {
        return Ok(s_c_membership_u64(a, b, x, y));
    }
    let upper = tau_c.complement();
    let upper = if upper.is_zero() {
        Angle::new(1, 1)
    } else {
        upper
    };
    Ok(t.orbit_cycle()
        .orbit
        .iter()
        .skip(1)
        .chain(std::iter::once(t))
        .all(|z| !(z > tau_c && *z < upper)))
}

/// Integer fast path: `t = a/b`, `tau_c = x/y`, both reduced.
pub fn s_c_membership_u64(a: u64, b: u64, x: u64, y: u64) -> bool {
    let len = crate::realslice::orbit_len_u64(b);
    let xb = (x as u128) * (b as u128);
    let cb = ((y - x) as u128) * (b as u128);
    let mut z = a;
    for _ in 0..len {
        z = crate::realslice::mod_double(z, b);
        let zy = (z as u128) * (y as u128);
        if zy > xb && zy < cb {
            return false;
        }
    }
    true
}

/// Integer fast path for the interval-hierarchy membership at
/// `sigma = (y - 2x)/y`: checks `||t||_k >= sigma 2^-k` over a full orbit
/// cycle (all deeper constraints repeat).
pub fn ksigma_membership_u64(a: u64, b: u64, x: u64, y: u64) -> bool {
    let len = crate::realslice::orbit_len_u64(b);
    let sb = ((y - 2 * x) as u128) * (b as u128);
    let mut z = a;
    // constraint at generation k reads the iterate k-1
    for _ in 1..=(len + 1) {
        let lhs = (2 * (z as u128)).abs_diff(b as u128) * (y as u128);
        if lhs < sb {
            return false;
        }
        z = crate::realslice::mod_double(z, b);
    }
    true
}

// ---------------------------------------------------------------------------
// The cascade-limit angle
// ---------------------------------------------------------------------------

/// Binary word of the period-doubling cascade's limit angle: the fixed point
/// of the substitution `0 -> 01, 1 -> 10` (the parity sequence). Its value
/// is approximately 0.4124540336.
pub fn feigenbaum_angle_word(nbits: usize) -> BinaryWord {
    let mut bits = vec![false];
    while bits.len() < nbits {
        let mut next = Vec::with_capacity(bits.len() * 2);
        for &b in &bits {
            next.push(b);
            next.push(!b);
        }
        bits = next;
    }
    bits.truncate(nbits);
    BinaryWord::new(bits)
}

/// High-precision decimal constant for the cascade limit parameter of the
/// main component.
pub fn feigenbaum_parameter() -> Rat {
    crate::parse_decimal("-1.4011551890920506").unwrap()
}

/// The image of the cascade-limit angle under a component's tuning words,
/// as a truncated binary word.
pub fn tuned_feigenbaum_word(words: &TuningWords, nbits: usize) -> BinaryWord {
    let p = words.period() as usize;
    let feig = feigenbaum_angle_word(nbits / p + 1);
    let mut bits = Vec::with_capacity(nbits + p);
    for i in 0..feig.len() {
        let w = if feig.bit(i) {
            words.theta1()
        } else {
            words.theta0()
        };
        bits.extend_from_slice(w.bits());
    }
    bits.truncate(nbits);
    BinaryWord::new(bits)
}

// ---------------------------------------------------------------------------
// Component table and the angle rho
// ---------------------------------------------------------------------------

/// A real hyperbolic component's real trace `[c_left, c_root]` located to a
/// stated tolerance.
#[derive(Debug, Clone, Serialize)]
pub struct ComponentInterval {
    pub opening: Opening,
    #[serde(with = "crate::rat_serde")]
    pub c_left: Rat,
    #[serde(with = "crate::rat_serde")]
    pub c_root: Rat,
}

/// Component traces for all real components of period up to the table bound.
#[derive(Debug, Clone)]
pub struct ComponentTable {
    pub entries: Vec<ComponentInterval>,
    pub tol: Rat,
}

impl ComponentTable {
    /// Locates every component of period `<= max_period` by inverting the
    /// angle function at its two boundary angles.
    pub fn build(max_period: u32, tol: &Rat) -> Result<Self, KneadError> {
        let mut entries = Vec::new();
        for o in enumerate_openings(max_period) {
            let c_root = pi(&o.theta_minus, tol)?.c;
            let c_left = pi(&o.omega_minus, tol)?.c;
            entries.push(ComponentInterval {
                opening: o,
                c_left,
                c_root,
            });
        }
        entries.sort_by(|a, b| a.c_left.cmp(&b.c_left));
        Ok(ComponentTable {
            entries,
            tol: tol.clone(),
        })
    }

    /// The component whose closed real trace contains `c`, if any is
    /// resolved at the table's tolerance.
    pub fn locate(&self, c: &Rat) -> Result<Option<&ComponentInterval>, BiaccessError> {
        for e in &self.entries {
            let lo = &e.c_left;
            let hi = &e.c_root;
            if c >= lo && c <= hi {
                // interior up to tolerance?
                if (c - lo).abs() <= self.tol || (c - hi).abs() <= self.tol {
                    return Err(BiaccessError::UnresolvedLocation);
                }
                return Ok(Some(e));
            }
            if (c - lo).abs() <= self.tol || (c - hi).abs() <= self.tol {
                return Err(BiaccessError::UnresolvedLocation);
            }
        }
        Ok(None)
    }
}

/// The angle attached to a parameter for dimension bounds: parameters inside
/// a component closure inherit the angle of the component's cascade limit;
/// others keep their own angle word.
#[derive(Debug, Clone, Serialize)]
pub struct RhoResult {
    /// Truncated binary word of the angle.
    pub word: BinaryWord,
    pub value: f64,
    /// Period of the component closure containing the parameter, when one
    /// does (1 denotes the main component).
    pub component_period: Option<u32>,
}

/// Computes the angle: `tau` of the associated cascade limit for parameters
/// in a component closure, plain `tau` otherwise.
pub fn rho(c: &RealParam, table: &ComponentTable, nbits: usize) -> Result<RhoResult, BiaccessError> {
    match table.locate(c.value())? {
        Some(entry) => {
            let word = if entry.opening.p == 1 {
                feigenbaum_angle_word(nbits)
            } else {
                let words = words_from_opening(&entry.opening).expect("period >= 2");
                tuned_feigenbaum_word(&words, nbits)
            };
            let value = word.to_f64();
            Ok(RhoResult {
                word,
                value,
                component_period: Some(entry.opening.p),
            })
        }
        None => {
            let word = tau(c, nbits)?;
            let value = word.to_f64();
            Ok(RhoResult {
                word,
                value,
                component_period: None,
            })
        }
    }
}

// ---------------------------------------------------------------------------
// Dimension bound formulas
// ---------------------------------------------------------------------------

/// Raw bound formula `1 - log2((16 rho - 5)/(32 rho - 13))`.
pub fn ell_formula(rho: f64) -> f64 {
    1.0 - ((16.0 * rho - 5.0) / (32.0 * rho - 13.0)).log2()
}

/// The windowed lower bound: only asserted for `rho` in `]4/9, 1/2]`.
pub fn ell(rho: f64) -> Option<f64> {
    if rho > 4.0 / 9.0 && rho <= 0.5 {
        Some(ell_formula(rho))
    } else {
        None
    }
}

/// Distortion lower bound for boundary images of univalent maps: `delta/2`
/// below 11/12, `delta/(1 + sqrt(12(1 - delta)))` above, continuous at the
/// break.
pub fn makarov_lower(delta: f64) -> f64 {
    assert!(delta > 0.0 && delta < 1.0);
    if delta < 11.0 / 12.0 {
        delta / 2.0
    } else {
        delta / (1.0 + (12.0 * (1.0 - delta)).sqrt())
    }
}

// ---------------------------------------------------------------------------
// Assembled report
// ---------------------------------------------------------------------------

/// Which regime the parameter falls in for the dimension bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DimRegime {
    /// `c = -2`: the full circle; dimension exactly 1.
    Chebyshev,
    /// `-2 < c <= -1.75`: the explicit lower bound applies.
    Bounded,
    /// `-1.75 < c <= c_Feig`: no explicit lower bound is known.
    NoBoundKnown,
    /// `c_Feig < c <= 1/4`: countable angle set; dimension 0.
    Vanishing,
}

/// Assembled dimension facts for one parameter. `lower` and the porosity
/// flag are theorem-backed bounds; the box-count slope is an estimate.
#[derive(Debug, Clone, Serialize)]
pub struct DimBoundReport {
    pub c: f64,
    pub regime: DimRegime,
    pub rho: Option<f64>,
    /// `1 - 2 tau(c)` from the certified angle word.
    pub sigma: Option<f64>,
    /// Absolute error carried by `sigma` (twice the word truncation error).
    pub sigma_error: f64,
    /// Theorem-backed lower bound for the angle-set dimension.
    pub lower: Option<f64>,
    /// Makarov transfer of `lower` to the Julia-set biaccessible points.
    pub ell_prime: Option<f64>,
    /// Dyadic exponent used for the box-count companion set.
    pub box_exponent: Option<u32>,
    pub boxdim_estimate: Option<f64>,
    /// The angle set is porous for positive sigma, hence dimension < 1.
    pub strictly_below_one: bool,
    /// Open problem marker: positivity at the cascade limit is not known.
    pub open_problem: Option<&'static str>,
}

/// Builds the report: locates the regime, computes the angle, the bound
/// `ell`, its Makarov transfer, and a box-count estimate of the companion
/// interval hierarchy.
pub fn dim_report(c: &RealParam, table: &ComponentTable) -> Result<DimBoundReport, BiaccessError> {
    let cv = c.value().clone();
    let c_f64 = cv.to_f64().unwrap();
    let minus_two = Rat::from_integer(Int::from(-2));
    let airplane_root = Rat::new(Int::from(-7), Int::from(4));
    let feig = feigenbaum_parameter();

    if cv == minus_two {
        return Ok(DimBoundReport {
            c: c_f64,
            regime: DimRegime::Chebyshev,
            rho: Some(0.5),
            sigma: Some(0.0),
            sigma_error: 0.0,
            lower: Some(1.0),
            ell_prime: None,
            box_exponent: None,
            boxdim_estimate: None,
            strictly_below_one: false,
            open_problem: None,
        });
    }

    let nbits = 48;
    let r = rho(c, table, nbits)?;
    let rho_val = r.value;
    let tau_word = tau(c, nbits)?;
    let tau_val = tau_word.to_f64();
    let sigma = 1.0 - 2.0 * tau_val;
    let sigma_error = 2.0 * 2f64.powi(-(nbits as i32));

    let regime = if cv <= airplane_root {
        DimRegime::Bounded
    } else if cv <= feig {
        DimRegime::NoBoundKnown
    } else {
        DimRegime::Vanishing
    };

    let lower = match regime {
        DimRegime::Bounded => ell(rho_val),
        _ => None,
    };
    let ell_prime = lower.map(makarov_lower);

    // companion hierarchy: the largest dyadic sigma' <= sigma, so its set
    // contains the spine-landing angle set and the estimate reads as a
    // proxy from below
    let (box_exponent, boxdim) = if sigma > 0.0 && regime != DimRegime::Vanishing {
        let p = ((1.0 / sigma).log2().ceil() as i64).clamp(2, 10) as u32;
        let sp = SigmaParam::dyadic(p);
        let est = boxdim_estimate(&sp, 6, 16).ok().map(|e| e.slope);
        let _ = dim_lower_bound(&sp);
        (Some(p), est)
    } else {
        (None, None)
    };

    let open_problem = if regime == DimRegime::NoBoundKnown {
        Some("no explicit lower bound known in this window; positivity at the cascade limit is open")
    } else {
        None
    };

    Ok(DimBoundReport {
        c: c_f64,
        regime,
        rho: Some(rho_val),
        sigma: Some(sigma),
        sigma_error,
        lower,
        ell_prime,
        box_exponent,
        boxdim_estimate: boxdim,
        strictly_below_one: true,
        open_problem,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;
    use num_integer::Integer;

    fn a(n: i64, d: i64) -> Angle {
        Angle::new(n, d)
    }

    #[test]
    fn membership_interval_empty_at_half() {
        for num in 0..40i64 {
            let t = a(num, 41);
            assert!(s_c_membership(&t, &Angle::half()).unwrap());
        }
    }

    #[test]
    fn basilica_catalogue() {
        let tau_c = a(1, 3);
        let mut catalogue = vec![a(0, 1), a(1, 2)];
        for n in 0..=20i64 {
            let d = 6 * (1i64 << n.min(40));
            let x = Angle::new(1, d);
            catalogue.push(x.clone());
            catalogue.push(x.complement());
            catalogue.push(Angle::from_rat(rat(1, 2) + x.as_rat()));
            catalogue.push(Angle::from_rat(rat(1, 2) - x.as_rat()));
        }
        for t in &catalogue {
            assert!(s_c_membership(t, &tau_c).unwrap(), "t={}", t);
        }
        // rationals off the catalogue pattern fail
        let mut outside = 0;
        for den in 3..=60i64 {
            for num in 1..den {
                if num.gcd(&den) != 1 {
                    continue;
                }
                let t = a(num, den);
                if catalogue.contains(&t) {
                    continue;
                }
                // skip deeper catalogue tails
                let d = t.denom().to_i64().unwrap();
                if d % 3 == 0 && (d / 3).count_ones() == 1 {
                    continue;
                }
                assert!(!s_c_membership(&t, &tau_c).unwrap(), "t={}", t);
                outside += 1;
            }
        }
        assert!(outside > 500);
    }

    #[test]
    fn membership_example_airplane() {
        assert!(s_c_membership(&a(3, 7), &a(3, 7)).unwrap());
    }

    #[test]
    fn membership_monotone_in_tau() {
        // larger tau_c accepts fewer angles
        let small = a(1, 3);
        let large = a(3, 7);
        for den in 2..=80i64 {
            for num in 0..den {
                let t = a(num, den);
                if s_c_membership(&t, &large).unwrap() {
                    assert!(s_c_membership(&t, &small).unwrap(), "t={}", t);
                }
            }
        }
    }

    #[test]
    fn bridge_to_interval_hierarchy() {
        // orbit test vs distance test at sigma = 1 - 2 tau_c, exhaustive on
        // moderate denominators for tau_c in {1/3, 3/7, 2/5}
        for (x, y) in [(1u64, 3u64), (3, 7), (2, 5)] {
            for b in 2..=400u64 {
                for a in 0..b {
                    if a.gcd(&b) != 1 {
                        continue;
                    }
                    assert_eq!(
                        s_c_membership_u64(a, b, x, y),
                        ksigma_membership_u64(a, b, x, y),
                        "t={}/{} tau={}/{}",
                        a,
                        b,
                        x,
                        y
                    );
                }
            }
        }
    }

    #[test]
    fn feigenbaum_word_value() {
        let w = feigenbaum_angle_word(40);
        assert_eq!(&w.to_string()[..16], "0110100110010110");
        assert!((w.to_f64() - 0.412454).abs() < 1e-6);
    }

    #[test]
    fn ell_values() {
        assert_eq!(ell(0.5), Some(1.0));
        assert!(ell(4.0 / 9.0).is_none());
        let v = ell_formula(4.0 / 9.0);
        assert!((v - (1.0 - (19f64 / 11.0).log2())).abs() < 1e-12);
        assert!((v - 0.2115).abs() < 1e-4);
        let v = ell_formula(0.47);
        assert!((v - (1.0 - (2.52f64 / 2.04).log2())).abs() < 1e-12);
        assert!((v - 0.6955).abs() < 1e-4);
        // strictly increasing on the window
        let mut prev = 0.0;
        for k in 1..=100 {
            let rho = 4.0 / 9.0 + (0.5 - 4.0 / 9.0) * (k as f64) / 100.0;
            let v = ell_formula(rho);
            assert!(v > prev);
            prev = v;
        }
        assert!((prev - 1.0).abs() < 1e-12);
    }

    #[test]
    fn makarov_values() {
        assert_eq!(makarov_lower(0.5), 0.25);
        assert!((makarov_lower(11.0 / 12.0) - 11.0 / 24.0).abs() < 1e-15);
        let above = makarov_lower(11.0 / 12.0 + 1e-13);
        let below = makarov_lower(11.0 / 12.0 - 1e-13);
        assert!((above - 11.0 / 24.0).abs() < 1e-12);
        assert!((below - 11.0 / 24.0).abs() < 1e-12);
        assert!((makarov_lower(0.99) - 0.99 / (1.0 + 0.12f64.sqrt())).abs() < 1e-15);
        for k in 1..=99 {
            let d = k as f64 / 100.0;
            assert!(makarov_lower(d) < d);
        }
    }
}
