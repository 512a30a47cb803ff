//! The set of angles whose parameter rays reach the real slice: membership by
//! the orbit-avoidance test, enumeration of real hyperbolic components and
//! their openings, exact covers, and box-counting statistics.

use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::angle::{Angle, BinaryWord};
use crate::{Int, Rat};

/// One real hyperbolic component's combinatorial record.
///
/// The component of period `p` and index `n` has root-ray angle
/// `theta_minus = n/(2^p - 1)` and the left endpoint of its real trace is hit
/// by the ray at `omega_minus = (n+1)/(2^p + 1)`. The open interval between
/// them is the component's opening: the gap it punches into the angle set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Opening {
    pub p: u32,
    pub n: u64,
    pub theta_minus: Angle,
    pub omega_minus: Angle,
    pub length: Angle,
}

impl Opening {
    /// Builds the candidate record for `(p, n)` without the acceptance test.
    pub fn candidate(p: u32, n: u64) -> Self {
        let theta = Angle::from_rat(Rat::new(Int::from(n), (Int::one() << p) - 1));
        let omega = Angle::from_rat(Rat::new(Int::from(n) + 1, (Int::one() << p) + 1));
        let length = Angle::from_rat(omega.as_rat() - theta.as_rat());
        Opening {
            p,
            n,
            theta_minus: theta,
            omega_minus: omega,
            length,
        }
    }

    pub fn theta_plus(&self) -> Angle {
        self.theta_minus.complement()
    }

    pub fn omega_plus(&self) -> Angle {
        self.omega_minus.complement()
    }

    /// True iff `t` lies strictly inside the opening.
    pub fn contains(&self, t: &Angle) -> bool {
        *t > self.theta_minus && *t < self.omega_minus
    }
}

/// Sorted list of disjoint closed intervals with exact rational endpoints.
/// Degenerate intervals (single points) are allowed.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IntervalSet {
    intervals: Vec<(Rat, Rat)>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BoxCountError {
    #[error("need at least two scales for a slope fit")]
    DegenerateFit,
    #[error("empty interval set")]
    EmptySet,
}

impl IntervalSet {
    /// Normalizes: sorts, drops inverted input, merges overlapping or
    /// touching intervals so the disjointness invariant holds.
    pub fn new(mut intervals: Vec<(Rat, Rat)>) -> Self {
        intervals.retain(|(a, b)| a <= b);
        intervals.sort();
        let mut merged: Vec<(Rat, Rat)> = Vec::with_capacity(intervals.len());
        for (a, b) in intervals {
            match merged.last_mut() {
                Some((_, hi)) if a <= *hi => {
                    if b > *hi {
                        *hi = b;
                    }
                }
                _ => merged.push((a, b)),
            }
        }
        IntervalSet { intervals: merged }
    }

    pub fn intervals(&self) -> &[(Rat, Rat)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn total_measure(&self) -> Rat {
        self.intervals
            .iter()
            .fold(Rat::zero(), |acc, (a, b)| acc + (b - a))
    }

    pub fn contains(&self, x: &Rat) -> bool {
        let mut lo = 0usize;
        let mut hi = self.intervals.len();
        while lo < hi {
            let mid = (lo + hi) / 2;
            let (a, b) = &self.intervals[mid];
            if x < a {
                hi = mid;
            } else if x > b {
                lo = mid + 1;
            } else {
                return true;
            }
        }
        false
    }

    /// Removes the open interval `]a, b[` from the set.
    pub fn remove_open(&self, a: &Rat, b: &Rat) -> IntervalSet {
        if a >= b {
            return self.clone();
        }
        let mut out = Vec::with_capacity(self.intervals.len() + 1);
        for (lo, hi) in &self.intervals {
            if hi <= a || lo >= b {
                out.push((lo.clone(), hi.clone()));
                continue;
            }
            if lo <= a {
                out.push((lo.clone(), a.clone()));
            }
            if hi >= b {
                out.push((b.clone(), hi.clone()));
            }
        }
        IntervalSet { intervals: out }
    }

    /// Counts generation-`k` dyadic cells `[j/2^k, (j+1)/2^k)` (closed on the
    /// left) meeting the set: positive-length intervals count the cells they
    /// overlap with positive measure; degenerate intervals count the single
    /// cell containing their point.
    pub fn boxcount(&self, k: u32) -> u64 {
        let scale = Int::one() << k;
        let mut count = 0u64;
        let mut last: Option<Int> = None;
        for (a, b) in &self.intervals {
            let asc = a * Rat::from_integer(scale.clone());
            let bsc = b * Rat::from_integer(scale.clone());
            let mut jlo = asc.floor().to_integer();
            let jhi = if a == b {
                jlo.clone()
            } else {
                bsc.ceil().to_integer() - 1
            };
            if let Some(prev) = &last {
                if jlo <= *prev {
                    jlo = prev + 1;
                }
            }
            if jlo <= jhi {
                count += (&jhi - &jlo + 1u32).to_u64().unwrap_or(u64::MAX);
                last = Some(jhi);
            }
        }
        count
    }
}

/// Box-counting record: cell counts per generation plus a least-squares
/// slope of `log2 N(k)` against `k`.
#[derive(Debug, Clone, Serialize)]
pub struct BoxCount {
    pub counts: Vec<(u32, u64)>,
    pub slope: f64,
}

pub(crate) fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|(x, _)| x).sum();
    let sy: f64 = points.iter().map(|(_, y)| y).sum();
    let sxx: f64 = points.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = points.iter().map(|(x, y)| x * y).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Dyadic-cell box counting over the given generations with a fitted slope.
pub fn boxcount_dimension(set: &IntervalSet, scales: &[u32]) -> Result<BoxCount, BoxCountError> {
    if set.is_empty() {
        return Err(BoxCountError::EmptySet);
    }
    if scales.len() < 2 {
        return Err(BoxCountError::DegenerateFit);
    }
    let counts: Vec<(u32, u64)> = scales.iter().map(|&k| (k, set.boxcount(k))).collect();
    let pts: Vec<(f64, f64)> = counts
        .iter()
        .map(|&(k, n)| (k as f64, (n as f64).log2()))
        .collect();
    Ok(BoxCount {
        counts,
        slope: least_squares_slope(&pts),
    })
}

// ---------------------------------------------------------------------------
// Membership in the real-ray angle set
// ---------------------------------------------------------------------------

/// Decides whether the parameter ray at angle `t` reaches the real slice.
///
/// Exact: folds `t` to `[0, 1/2]` and checks that no forward doubling iterate
/// lies strictly inside `]t, 1-t[`. Orbit points landing exactly on an
/// endpoint do not reject, so opening endpoints are members.
pub fn in_r(t: &Angle) -> bool {
    let t = t.fold_to_half();
    if let (Some(a), Some(b)) = (t.numer().to_u64(), t.denom().to_u64()) {
        return in_r_u64(a, b);
    }
    let upper = t.complement();
    t.orbit_cycle()
        .orbit
        .iter()
        .skip(1)
        .all(|x| !(*x > t && *x < upper))
}

/// Integer fast path: `t = a/b` reduced, `0 <= a/b <= 1/2`.
fn in_r_u64(a: u64, b: u64) -> bool {
    if a == 0 || 2 * a == b {
        return true;
    }
    let len = orbit_len_u64(b);
    let mut x = a;
    for _ in 0..len {
        x = mod_double(x, b);
        if x > a && x < b - a {
            return false;
        }
    }
    true
}

#[inline]
pub(crate) fn mod_double(x: u64, m: u64) -> u64 {
    let y = 2 * (x as u128);
    (if y >= m as u128 { y - m as u128 } else { y }) as u64
}

/// Preperiod plus period of the doubling orbit of any `a/m` in lowest terms.
pub(crate) fn orbit_len_u64(m: u64) -> u64 {
    let mut odd = m;
    let mut v = 0u64;
    while odd % 2 == 0 {
        odd /= 2;
        v += 1;
    }
    v + ord2_u64(odd)
}

/// Multiplicative order of 2 modulo odd `m` (1 for `m = 1`).
pub(crate) fn ord2_u64(m: u64) -> u64 {
    if m <= 1 {
        return 1;
    }
    let mut pow = 2 % m;
    let mut k = 1u64;
    while pow != 1 {
        pow = mod_double(pow, m);
        k += 1;
    }
    k
}

/// Outcome of the finite-depth membership test on a binary word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DepthOutcome {
    SurvivesToDepth(usize),
    RejectedAtStep(usize),
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("strict-inclusion test undecidable from {available} bits at step {step}")]
pub struct InsufficientPrecision {
    pub step: usize,
    pub available: usize,
}

/// Finite-depth membership surrogate for angles given as a truncated binary
/// expansion `t = 0.w`.
///
/// Rejects at the first `k <= depth` with the shifted word strictly between
/// the word and its complement; errors when a needed comparison is not
/// decidable from the available bits.
pub fn in_r_depth(w: &BinaryWord, depth: usize) -> Result<DepthOutcome, InsufficientPrecision> {
    assert!(depth >= 1 && w.len() > depth);
    let bits = w.bits();
    let len = bits.len();
    for k in 1..=depth {
        let mut above_t = None;
        let mut below_c = None;
        for i in 0..(len - k) {
            let s = bits[k + i];
            if above_t.is_none() && s != bits[i] {
                above_t = Some(s);
            }
            if below_c.is_none() && s == bits[i] {
                // complement bit is !bits[i]; s differs from it here
                below_c = Some(!s);
            }
            if above_t.is_some() && below_c.is_some() {
                break;
            }
        }
        match (above_t, below_c) {
            // strictly above t and strictly below 1-t
            (Some(true), Some(true)) => return Ok(DepthOutcome::RejectedAtStep(k)),
            // one decided "outside" verdict suffices
            (Some(false), _) | (_, Some(false)) => {}
            _ => {
                return Err(InsufficientPrecision {
                    step: k,
                    available: len - k,
                })
            }
        }
    }
    Ok(DepthOutcome::SurvivesToDepth(depth))
}

// ---------------------------------------------------------------------------
// Opening enumeration and covers
// ---------------------------------------------------------------------------

/// All openings of real hyperbolic components of period `<= max_period`,
/// sorted by `theta_minus`.
///
/// A candidate `(p, n)` is accepted iff the exact doubling period of
/// `n/(2^p - 1)` equals `p` and both `theta_minus` and `omega_minus` pass the
/// membership test. Lower-period duplicates fail the period check; their
/// omega endpoint would also fail the membership test, kept as a redundant
/// safeguard.
pub fn enumerate_openings(max_period: u32) -> Vec<Opening> {
    assert!((1..=62).contains(&max_period));
    let mut out: Vec<Opening> = (1..=max_period)
        .flat_map(|p| {
            let b = (1u64 << p) - 1;
            (0..1u64 << (p - 1))
                .into_par_iter()
                .filter_map(move |n| {
                    let g = n.gcd(&b);
                    let den = b / g;
                    if den == 1 {
                        // theta = 0 has doubling period 1: only (p=1, n=0)
                        if n != 0 || p != 1 {
                            return None;
                        }
                    } else if ord2_u64(den) != p as u64 {
                        return None;
                    }
                    if !in_r_u64(n / g, den) {
                        return None;
                    }
                    let om = (1u64 << p) + 1;
                    let g2 = (n + 1).gcd(&om);
                    if !in_r_u64((n + 1) / g2, om / g2) {
                        return None;
                    }
                    Some(Opening::candidate(p, n))
                })
                .collect::<Vec<_>>()
        })
        .collect();
    out.sort_by(|x, y| x.theta_minus.cmp(&y.theta_minus));
    out
}

/// Sum of the lengths of all openings of period `<= max_period`.
/// Strictly increasing in the period bound and always `< 1/2`.
pub fn openings_length_sum(max_period: u32) -> Rat {
    enumerate_openings(max_period)
        .iter()
        .fold(Rat::zero(), |acc, o| acc + o.length.as_rat())
}

/// Closed complement of the period-`<= max_period` openings within `[0, 1/2]`:
/// an exact cover of the real-ray angle set.
pub fn cover_r(max_period: u32) -> IntervalSet {
    let mut set = IntervalSet::new(vec![(Rat::zero(), Rat::new(Int::one(), Int::from(2)))]);
    for o in enumerate_openings(max_period) {
        set = set.remove_open(o.theta_minus.as_rat(), o.omega_minus.as_rat());
    }
    set
}
