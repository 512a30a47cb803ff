//! The compact angle sets cut out by keeping every generation-k dyadic
//! rational at distance at least `sigma * 2^-k`: exact interval hierarchies,
//! a mechanized check of their metric structure, a mass-distribution measure,
//! dimension bounds, porosity witnesses, and the run-length characterization.
//!
//! Internally levels are built in shifted coordinates `u = t - 1/4`: the
//! neighborhood of `t = 1/4` is removed at the first level, so no interval
//! ever wraps around the shifted origin. Public output is unrolled back to
//! `t`-coordinates on the window `[1/4, 5/4)`, where the interval around
//! `t = 0` appears as an interval around 1.

use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::angle::{Angle, BinaryWord};
use crate::realslice::{least_squares_slope, IntervalSet};
use crate::{Int, Rat};

/// The thinning parameter `sigma` of the interval hierarchy, with its exact
/// exponent when `sigma` is a negative power of two.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SigmaParam {
    #[serde(with = "crate::rat_serde")]
    sigma: Rat,
    dyadic_exponent: Option<u32>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum KsigmaError {
    #[error("sigma must lie strictly between 0 and 1")]
    SigmaOutOfRange,
    #[error("operation requires sigma = 2^-p with integer p >= 2")]
    RequiresDyadicSigma,
    #[error("level must be at least 2")]
    LevelTooSmall,
    #[error("level {0} exceeds the exact-arithmetic cap of {MAX_LEVEL}")]
    LevelTooDeep(u32),
    #[error("dimension bound is vacuous for sigma >= 3/8")]
    DimBoundVacuous,
    #[error("need at least two levels for a slope fit")]
    DegenerateFit,
    #[error("interval must have positive length")]
    EmptyInterval,
}

/// Exact level construction is capped here; interval counts roughly double
/// per level.
pub const MAX_LEVEL: u32 = 24;

impl SigmaParam {
    /// `sigma = 2^-p` with `p >= 2`.
    pub fn dyadic(p: u32) -> Self {
        assert!(p >= 2, "dyadic exponent must be >= 2");
        SigmaParam {
            sigma: Rat::new(Int::one(), Int::one() << p),
            dyadic_exponent: Some(p),
        }
    }

    /// Any exact `sigma` in `]0, 1[`; a dyadic exponent is detected.
    pub fn rational(sigma: Rat) -> Result<Self, KsigmaError> {
        if sigma <= Rat::zero() || sigma >= Rat::one() {
            return Err(KsigmaError::SigmaOutOfRange);
        }
        let dyadic_exponent = if sigma.numer().is_one() {
            let d = sigma.denom();
            if (d & (d - Int::one())).is_zero() {
                let p = d.bits() - 1;
                if p >= 2 {
                    Some(p as u32)
                } else {
                    None
                }
            } else {
                None
            }
        } else {
            None
        };
        Ok(SigmaParam {
            sigma,
            dyadic_exponent,
        })
    }

    pub fn sigma(&self) -> &Rat {
        &self.sigma
    }

    pub fn sigma_f64(&self) -> f64 {
        self.sigma.to_f64().unwrap_or(f64::NAN)
    }

    pub fn dyadic_exponent(&self) -> Option<u32> {
        self.dyadic_exponent
    }
}

// ---------------------------------------------------------------------------
// Level construction
// ---------------------------------------------------------------------------

/// A level in shifted u-coordinates with all endpoints scaled to integers
/// over `2^scale`. Only used for dyadic sigma.
#[derive(Debug, Clone)]
pub(crate) struct DyadicLevel {
    pub scale: u32,
    pub ivals: Vec<(u64, u64)>,
}

impl DyadicLevel {
    /// Level 2 in u-coordinates: the circle minus the open
    /// `sigma/4`-neighborhoods of `u = 0` and `u = 1/2`.
    fn base(p: u32) -> Self {
        let scale = p + 2;
        let q = 1u64 << scale;
        let half = q >> 1;
        DyadicLevel {
            scale,
            ivals: vec![(1, half - 1), (half + 1, q - 1)],
        }
    }

    /// Refines level `k-1` to level `k` (k >= 3): removes the open
    /// `sigma * 2^-k`-neighborhood of every generation-k dyadic.
    fn refine(&mut self, p: u32, k: u32) {
        let new_scale = p + k;
        let shift = new_scale - self.scale;
        self.scale = new_scale;
        let spacing = 1u64 << (p + 1); // gap between odd multiples of 2^p
        let mut out = Vec::with_capacity(self.ivals.len() * 2);
        for &(a0, b0) in &self.ivals {
            let (a, b) = (a0 << shift, b0 << shift);
            // smallest center c = odd * 2^p with c >= a
            let mut j = a >> p;
            if (j << p) < a {
                j += 1;
            }
            if j % 2 == 0 {
                j += 1;
            }
            let mut c = j << p;
            let mut lo = a;
            while c <= b {
                if c > lo {
                    out.push((lo, c - 1));
                }
                lo = c + 1;
                c += spacing;
            }
            if lo <= b {
                out.push((lo, b));
            }
        }
        self.ivals = out;
    }

    fn measure(&self) -> Rat {
        let total: u64 = self.ivals.iter().map(|&(a, b)| b - a).sum();
        Rat::new(Int::from(total), Int::one() << self.scale)
    }
}

pub(crate) fn build_u_dyadic(p: u32, n: u32) -> DyadicLevel {
    let mut lvl = DyadicLevel::base(p);
    for k in 3..=n {
        lvl.refine(p, k);
    }
    lvl
}

/// General-sigma level in u-coordinates with exact rational endpoints.
fn build_u_rational(sigma: &Rat, n: u32) -> Vec<(Rat, Rat)> {
    let quarter = Rat::new(Int::one(), Int::from(4));
    let half = Rat::new(Int::one(), Int::from(2));
    let h2 = sigma * &quarter;
    let mut ivals = vec![(h2.clone(), &half - &h2), (&half + &h2, Rat::one() - &h2)];
    for k in 3..=n {
        let scale = Rat::from_integer(Int::one() << k);
        let h = sigma / &scale;
        let mut out = Vec::with_capacity(ivals.len() * 2);
        for (a, b) in &ivals {
            // odd j with the removed interval around j/2^k meeting [a, b]
            let mut j: Int = ((a - &h) * &scale).floor().to_integer() + 1;
            if j.is_even() {
                j += 1;
            }
            let mut lo = a.clone();
            let mut center = Rat::new(j.clone(), Int::one() << k);
            while &center - &h < *b {
                let cut_lo = &center - &h;
                let cut_hi = &center + &h;
                if cut_lo > lo {
                    out.push((lo.clone(), cut_lo));
                }
                if cut_hi > lo {
                    lo = cut_hi;
                }
                j += 2;
                center = Rat::new(j.clone(), Int::one() << k);
            }
            if lo <= *b {
                out.push((lo, b.clone()));
            }
        }
        ivals = out;
    }
    ivals
}

/// One level of the hierarchy, unrolled to t-coordinates on `[1/4, 5/4)`.
#[derive(Debug, Clone)]
pub struct KsigmaLevel {
    pub n: u32,
    pub set: IntervalSet,
}

impl KsigmaLevel {
    /// Membership of an angle in this finite level (circle-aware).
    pub fn contains_angle(&self, t: &Angle) -> bool {
        let x = t.as_rat().clone();
        self.set.contains(&x) || self.set.contains(&(x + Rat::one()))
    }
}

fn unroll(ivals_u: impl Iterator<Item = (Rat, Rat)>) -> IntervalSet {
    let quarter = Rat::new(Int::one(), Int::from(4));
    IntervalSet::new(ivals_u.map(|(a, b)| (a + &quarter, b + &quarter)).collect())
}

/// Builds the exact level-`n` interval set: the intersection of the
/// constraints `||t||_k >= sigma 2^-k` for `2 <= k <= n`.
///
/// Nested in `n`; endpoints are exact rationals; the intervals are closed.
pub fn build_level(sp: &SigmaParam, n: u32) -> Result<KsigmaLevel, KsigmaError> {
    if n < 2 {
        return Err(KsigmaError::LevelTooSmall);
    }
    if n > MAX_LEVEL {
        return Err(KsigmaError::LevelTooDeep(n));
    }
    let set = match sp.dyadic_exponent {
        Some(p) => {
            let lvl = build_u_dyadic(p, n);
            let den = Int::one() << lvl.scale;
            unroll(lvl.ivals.iter().map(|&(a, b)| {
                (
                    Rat::new(Int::from(a), den.clone()),
                    Rat::new(Int::from(b), den.clone()),
                )
            }))
        }
        None => unroll(build_u_rational(&sp.sigma, n).into_iter()),
    };
    Ok(KsigmaLevel { n, set })
}

/// Interval counts of the levels in `lo..=hi` in one incremental pass.
pub fn interval_counts(sp: &SigmaParam, lo: u32, hi: u32) -> Result<Vec<(u32, u64)>, KsigmaError> {
    if lo < 2 {
        return Err(KsigmaError::LevelTooSmall);
    }
    if hi > MAX_LEVEL || lo > hi {
        return Err(KsigmaError::LevelTooDeep(hi));
    }
    let mut out = Vec::new();
    match sp.dyadic_exponent {
        Some(p) => {
            let mut lvl = DyadicLevel::base(p);
            if lo == 2 {
                out.push((2, 2));
            }
            for k in 3..=hi {
                lvl.refine(p, k);
                if k >= lo {
                    out.push((k, lvl.ivals.len() as u64));
                }
            }
        }
        None => {
            for k in lo..=hi {
                out.push((k, build_u_rational(&sp.sigma, k).len() as u64));
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Membership
// ---------------------------------------------------------------------------

/// Exact finite-depth membership: `||t||_k >= sigma 2^-k` for all
/// `2 <= k <= depth`, ties included (the sets are closed).
pub fn membership(t: &Angle, sp: &SigmaParam, depth: u32) -> bool {
    assert!(depth >= 2);
    // deeper constraints repeat once the doubling orbit cycles
    let cap = (t.bit_preperiod() + t.bit_period() + 1).min(depth as u64) as u32;
    for k in 2..=cap {
        let dist = t.dyadic_distance(k as u64);
        let bound = &sp.sigma / Rat::from_integer(Int::one() << k);
        if dist < bound {
            return false;
        }
    }
    true
}

/// Verdict of the symbolic run-length membership scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RunVerdict {
    Member,
    NotMember,
    /// The deciding run straddles the word end: strictness cannot be
    /// resolved from the available bits.
    InsufficientData,
}

impl RunVerdict {
    pub fn decided(self) -> Option<bool> {
        match self {
            RunVerdict::Member => Some(true),
            RunVerdict::NotMember => Some(false),
            RunVerdict::InsufficientData => None,
        }
    }
}

/// Symbolic membership for `sigma = 2^-p`: a word is excluded exactly when
/// some maximal run of `p` equal consecutive bits starts at position
/// `j >= 3` (1-indexed) and strictness is confirmed by a later bit equal to
/// the run's symbol; runs starting at positions 1 or 2 never exclude.
pub fn membership_runlength(w: &BinaryWord, p: usize) -> RunVerdict {
    let bits = w.bits();
    let len = bits.len();
    assert!(len >= p + 2, "word too short");
    let mut pending = false;
    // j is the 0-indexed start of a maximal run; positions 0 and 1 are free
    for j in 2..=len.saturating_sub(p) {
        if bits[j - 1] == bits[j] {
            continue;
        }
        let b = bits[j];
        if bits[j..j + p].iter().any(|&x| x != b) {
            continue;
        }
        // a later bit equal to b confirms the strict inequality; an unbroken
        // opposite tail leaves the exact-tie case (membership) unresolved
        if bits[j + p..].iter().any(|&x| x == b) {
            return RunVerdict::NotMember;
        }
        pending = true;
    }
    if pending {
        RunVerdict::InsufficientData
    } else {
        RunVerdict::Member
    }
}

// ---------------------------------------------------------------------------
// Dimension bounds
// ---------------------------------------------------------------------------

/// Closed-form lower bound `1 - log2((3 - 4 sigma)/(3 - 8 sigma))` for the
/// Hausdorff dimension, clamped to 0; vacuous (0) for `sigma >= 3/8`.
pub fn dim_lower_bound(sp: &SigmaParam) -> f64 {
    dim_lower_bound_strict(sp).unwrap_or(0.0)
}

/// Strict variant: errors instead of returning 0 when `sigma >= 3/8`.
pub fn dim_lower_bound_strict(sp: &SigmaParam) -> Result<f64, KsigmaError> {
    if sp.sigma >= Rat::new(Int::from(3), Int::from(8)) {
        return Err(KsigmaError::DimBoundVacuous);
    }
    let v = 1.0 - lambda_ratio(sp).to_f64().unwrap().log2();
    Ok(v.max(0.0))
}

/// `(3 - 4 sigma)/(3 - 8 sigma)`: the per-level density growth factor.
pub fn lambda_ratio(sp: &SigmaParam) -> Rat {
    let three = Rat::from_integer(Int::from(3));
    let four = Rat::from_integer(Int::from(4));
    let eight = Rat::from_integer(Int::from(8));
    (&three - &four * &sp.sigma) / (&three - &eight * &sp.sigma)
}

#[derive(Debug, Clone, Serialize)]
pub struct BoxDimEstimate {
    pub counts: Vec<(u32, u64)>,
    pub slope: f64,
}

/// Least-squares slope of `log2(interval count)` against the level: a
/// numerical companion to the closed-form bound.
pub fn boxdim_estimate(sp: &SigmaParam, lo: u32, hi: u32) -> Result<BoxDimEstimate, KsigmaError> {
    if hi <= lo {
        return Err(KsigmaError::DegenerateFit);
    }
    let counts = interval_counts(sp, lo, hi)?;
    let pts: Vec<(f64, f64)> = counts
        .iter()
        .map(|&(n, c)| (n as f64, (c as f64).log2()))
        .collect();
    Ok(BoxDimEstimate {
        counts,
        slope: least_squares_slope(&pts),
    })
}

// ---------------------------------------------------------------------------
// Structure verification
// ---------------------------------------------------------------------------

/// Result of one clause check at one level.
#[derive(Debug, Clone, Serialize)]
pub struct ClauseCheck {
    pub clause: u8,
    pub level: u32,
    pub pass: bool,
    pub witness: Option<String>,
}

/// Mechanized verification of the hierarchy's metric structure at dyadic
/// sigma over levels `2..=n_max`.
#[derive(Debug, Clone, Serialize)]
pub struct StructureReport {
    pub p: u32,
    pub n_max: u32,
    pub checks: Vec<ClauseCheck>,
    /// The distinguished intervals attain the ratio `(1-2s)/(1-s)`.
    pub distinguished_ratio_attained: bool,
    /// Some other interval attains the ratio `(1-3s)/(1-2s)`.
    pub boundary_case_ratio_attained: bool,
    pub all_pass: bool,
}

/// Exactly checks, for every level `n <= n_max`:
/// (1) endpoints are dyadic of generation `k+p` for some `2 <= k <= n`;
/// (2) the distinguished intervals centered at 0 and 1/2 are present with
///     length `2^{-n+1}(1 - sigma)`;
/// (3) every interval has 1 to 3 children, exactly 3 for the distinguished;
/// (4) `0 < m(I) <= 2^{-n+1}(1 - sigma)`;
/// (5) the child-mass ratio is at least `(3 - 8 sigma)/(3 - 4 sigma)`.
pub fn verify_structure(sp: &SigmaParam, n_max: u32) -> Result<StructureReport, KsigmaError> {
    let p = sp.dyadic_exponent.ok_or(KsigmaError::RequiresDyadicSigma)?;
    if n_max < 3 {
        return Err(KsigmaError::LevelTooSmall);
    }
    if n_max > MAX_LEVEL {
        return Err(KsigmaError::LevelTooDeep(n_max));
    }
    let mut checks: Vec<ClauseCheck> = Vec::new();
    let mut distinguished_ratio_attained = true;
    let mut boundary_case_ratio_attained = false;

    let mut level = build_u_dyadic(p, 2);
    for n in 2..=n_max {
        let scale = level.scale;
        // (1) endpoint generations lie in [p+2, n+p]
        {
            let mut pass = true;
            let mut witness = None;
            let full = 1u64 << scale;
            for &(a, b) in &level.ivals {
                for e in [a, b] {
                    let tnum = (e + (full >> 2)) % full;
                    let gen = scale - tnum.trailing_zeros();
                    if !(p + 2 <= gen && gen <= n + p) {
                        pass = false;
                        witness =
                            Some(format!("endpoint {}/{} has generation {}", tnum, full, gen));
                    }
                }
            }
            checks.push(ClauseCheck {
                clause: 1,
                level: n,
                pass,
                witness,
            });
        }
        // (2) distinguished intervals at u = 1/4 (t = 1/2) and u = 3/4 (t = 0)
        let dist_idx = {
            let full = 1u64 << scale;
            let w = (1u64 << (scale - n)) - (1u64 << (scale - n - p));
            let find =
                |c: u64| level.ivals.iter().position(|&(a, b)| a == c - w && b == c + w);
            let i_half = find(full >> 2);
            let i_zero = find(3 * (full >> 2));
            let pass = i_half.is_some() && i_zero.is_some();
            checks.push(ClauseCheck {
                clause: 2,
                level: n,
                pass,
                witness: if pass {
                    None
                } else {
                    Some("distinguished interval missing or of wrong length".into())
                },
            });
            (i_half, i_zero)
        };
        // (4) interval length bound
        {
            let bound = (1u64 << (scale - n + 1)) - (1u64 << (scale - n - p + 1));
            let mut pass = true;
            let mut witness = None;
            for &(a, b) in &level.ivals {
                if a >= b || b - a > bound {
                    pass = false;
                    witness = Some(format!("interval [{}, {}] at scale {}", a, b, scale));
                }
            }
            checks.push(ClauseCheck {
                clause: 4,
                level: n,
                pass,
                witness,
            });
        }
        if n == n_max {
            break;
        }
        let mut child = level.clone();
        child.refine(p, n + 1);
        let shift = child.scale - level.scale;
        // (3) child counts and (5) mass ratios
        {
            let mut pass3 = true;
            let mut wit3 = None;
            let mut pass5 = true;
            let mut wit5 = None;
            let mut ci = 0usize;
            let thr_num = 3u128 * (1u128 << p) - 8; // (3 - 8s)/(3 - 4s)
            let thr_den = 3u128 * (1u128 << p) - 4;
            let dist_num = (1u128 << p) - 2; // (1 - 2s)/(1 - s)
            let dist_den = (1u128 << p) - 1;
            let case1_num = (1u128 << p) - 3; // (1 - 3s)/(1 - 2s)
            let case1_den = (1u128 << p) - 2;
            for (pi, &(a, b)) in level.ivals.iter().enumerate() {
                let (pa, pb) = (a << shift, b << shift);
                let mut kept = 0u128;
                let mut n_children = 0u32;
                while ci < child.ivals.len() && child.ivals[ci].1 <= pb {
                    debug_assert!(child.ivals[ci].0 >= pa);
                    kept += (child.ivals[ci].1 - child.ivals[ci].0) as u128;
                    n_children += 1;
                    ci += 1;
                }
                let is_dist = Some(pi) == dist_idx.0 || Some(pi) == dist_idx.1;
                if !(1..=3).contains(&n_children) || (is_dist && n_children != 3) {
                    pass3 = false;
                    wit3 = Some(format!(
                        "level {} interval {} has {} children",
                        n, pi, n_children
                    ));
                }
                let m = (pb - pa) as u128;
                if kept * thr_den < m * thr_num {
                    pass5 = false;
                    wit5 = Some(format!(
                        "level {} interval {} ratio {}/{} below bound",
                        n, pi, kept, m
                    ));
                }
                if is_dist && kept * dist_den != m * dist_num {
                    distinguished_ratio_attained = false;
                }
                if !is_dist && kept * case1_den == m * case1_num {
                    boundary_case_ratio_attained = true;
                }
            }
            checks.push(ClauseCheck {
                clause: 3,
                level: n,
                pass: pass3,
                witness: wit3,
            });
            checks.push(ClauseCheck {
                clause: 5,
                level: n,
                pass: pass5,
                witness: wit5,
            });
        }
        level = child;
    }
    let all_pass = checks.iter().all(|c| c.pass);
    Ok(StructureReport {
        p,
        n_max,
        checks,
        distinguished_ratio_attained,
        boundary_case_ratio_attained,
        all_pass,
    })
}

// ---------------------------------------------------------------------------
// Mass distribution
// ---------------------------------------------------------------------------

/// Where the recursive measure starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MassStart {
    /// Uniform-by-length on the whole level-2 set.
    Full,
    /// Natural measure on the central block `[(1-sigma)/2, (1+sigma)/2]`
    /// at level `p + 1`.
    CentralBlock,
}

/// The level-`n` intervals (u-coordinates, scaled) with their weights.
#[derive(Debug, Clone)]
pub struct MassDistribution {
    pub n: u32,
    pub scale: u32,
    pub intervals: Vec<(u64, u64)>,
    pub weights: Vec<Rat>,
}

impl MassDistribution {
    /// Largest weight/length^s ratio over the carried intervals.
    pub fn frostman_ratio(&self, s: f64) -> f64 {
        let den = 2f64.powi(self.scale as i32);
        self.intervals
            .iter()
            .zip(&self.weights)
            .map(|(&(a, b), w)| {
                let m = (b - a) as f64 / den;
                w.to_f64().unwrap() / m.powf(s)
            })
            .fold(0.0f64, f64::max)
    }

    /// Largest weight/(lambda^n * length) ratio, the exact geometric form the
    /// recursion preserves.
    pub fn scaled_density_ratio(&self, sp: &SigmaParam) -> Rat {
        let lambda = lambda_ratio(sp);
        let mut lam_n = Rat::one();
        for _ in 0..self.n {
            lam_n = lam_n * &lambda;
        }
        let den = Rat::from_integer(Int::one() << self.scale);
        self.intervals
            .iter()
            .zip(&self.weights)
            .map(|(&(a, b), w)| {
                let m = Rat::from_integer(Int::from(b - a)) / &den;
                w / (&lam_n * m)
            })
            .fold(Rat::zero(), |acc, x| if x > acc { x } else { acc })
    }
}

/// Builds the recursive probability measure on the level-`n` set: uniform
/// density per interval, child weight proportional to child length within
/// each parent.
pub fn mass_distribution(
    sp: &SigmaParam,
    n: u32,
    start: MassStart,
) -> Result<MassDistribution, KsigmaError> {
    let p = sp.dyadic_exponent.ok_or(KsigmaError::RequiresDyadicSigma)?;
    if n < 2 {
        return Err(KsigmaError::LevelTooSmall);
    }
    if n > MAX_LEVEL {
        return Err(KsigmaError::LevelTooDeep(n));
    }
    let (mut level, start_n) = match start {
        MassStart::Full => (build_u_dyadic(p, 2), 2),
        MassStart::CentralBlock => {
            let start_n = p + 1;
            if n < start_n {
                return Err(KsigmaError::LevelTooSmall);
            }
            let mut lvl = build_u_dyadic(p, start_n);
            // central block in t is [(1-s)/2, (1+s)/2]: in u-coordinates
            // [1/4 - s/2, 1/4 + s/2]
            let blk_half = 1u64 << (lvl.scale - p - 1);
            let c = 1u64 << (lvl.scale - 2);
            lvl.ivals
                .retain(|&(a, b)| b > c - blk_half && a < c + blk_half);
            for iv in &mut lvl.ivals {
                iv.0 = iv.0.max(c - blk_half);
                iv.1 = iv.1.min(c + blk_half);
            }
            (lvl, start_n)
        }
    };
    let total = level.measure();
    let den = Rat::from_integer(Int::one() << level.scale);
    let mut weights: Vec<Rat> = level
        .ivals
        .iter()
        .map(|&(a, b)| Rat::from_integer(Int::from(b - a)) / &den / &total)
        .collect();
    for k in (start_n + 1)..=n {
        let mut child = level.clone();
        child.refine(p, k);
        let shift = child.scale - level.scale;
        let mut new_weights = Vec::with_capacity(child.ivals.len());
        let mut ci = 0usize;
        for (pi, &(_, b)) in level.ivals.iter().enumerate() {
            let pb = b << shift;
            let c0 = ci;
            let mut kept = 0u64;
            while ci < child.ivals.len() && child.ivals[ci].1 <= pb {
                kept += child.ivals[ci].1 - child.ivals[ci].0;
                ci += 1;
            }
            for &(ca, cb) in &child.ivals[c0..ci] {
                new_weights.push(&weights[pi] * Rat::new(Int::from(cb - ca), Int::from(kept)));
            }
        }
        level = child;
        weights = new_weights;
    }
    Ok(MassDistribution {
        n,
        scale: level.scale,
        intervals: level.ivals,
        weights,
    })
}

// ---------------------------------------------------------------------------
// Porosity
// ---------------------------------------------------------------------------

/// A gap witness: an open subinterval of `I` disjoint from the hierarchy,
/// of length at least `sigma/4 * m(I)`.
#[derive(Debug, Clone, Serialize)]
pub struct PorosityWitness {
    #[serde(with = "crate::rat_serde")]
    pub lo: Rat,
    #[serde(with = "crate::rat_serde")]
    pub hi: Rat,
    /// Centered at a dyadic rational of this generation; disjoint from every
    /// level of at least this index.
    pub generation: u32,
}

/// Gap construction: pick `n` with `2^-(n-1) < m(I) <= 2^-(n-2)`, fit an
/// aligned generation-n cell inside `I`, and return the removed neighborhood
/// of its midpoint.
pub fn porosity_witness(
    sp: &SigmaParam,
    lo: &Rat,
    hi: &Rat,
) -> Result<PorosityWitness, KsigmaError> {
    let m = hi - lo;
    if m <= Rat::zero() {
        return Err(KsigmaError::EmptyInterval);
    }
    let two = Rat::from_integer(Int::from(2));
    let mut n: u32 = 2;
    let mut cell = Rat::one(); // 2^-(n-2)
    while m <= &cell / &two {
        cell = cell / &two;
        n += 1;
    }
    let scale = Rat::from_integer(Int::one() << n);
    let a = (lo * &scale).ceil().to_integer();
    let mid = Rat::new(&a * 2 + 1, Int::one() << (n + 1));
    let h = &sp.sigma / Rat::from_integer(Int::one() << (n + 1));
    Ok(PorosityWitness {
        lo: &mid - &h,
        hi: &mid + &h,
        generation: n + 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;

    fn a(n: i64, d: i64) -> Angle {
        Angle::new(n, d)
    }

    #[test]
    fn base_level_sigma_quarter() {
        let sp = SigmaParam::dyadic(2);
        let lvl = build_level(&sp, 2).unwrap();
        assert_eq!(
            lvl.set.intervals(),
            &[
                (rat(5, 16), rat(11, 16)),
                (rat(13, 16), rat(19, 16)), // the interval around t = 0, unrolled
            ]
        );
        assert!(lvl.contains_angle(&a(0, 1)));
        assert!(lvl.contains_angle(&a(1, 2)));
        assert!(!lvl.contains_angle(&a(1, 4)));
    }

    #[test]
    fn rational_and_dyadic_paths_agree() {
        let spd = SigmaParam::dyadic(3);
        let spr = SigmaParam::rational(rat(1, 8)).unwrap();
        assert_eq!(spr.dyadic_exponent(), Some(3));
        for n in 2..=9 {
            let d = build_level(&spd, n).unwrap();
            let quarter = rat(1, 4);
            let unrolled: Vec<(Rat, Rat)> = build_u_rational(&rat(1, 8), n)
                .into_iter()
                .map(|(x, y)| (x + &quarter, y + &quarter))
                .collect();
            assert_eq!(d.set.intervals(), &unrolled[..], "n={}", n);
        }
    }

    #[test]
    fn nesting_and_distinguished_lengths() {
        for p in 2..=5 {
            let sp = SigmaParam::dyadic(p);
            let mut prev: Option<KsigmaLevel> = None;
            for n in 2..=11 {
                let lvl = build_level(&sp, n).unwrap();
                if let Some(prev) = &prev {
                    for (x, y) in lvl.set.intervals() {
                        assert!(
                            prev.set.intervals().iter().any(|(pa, pb)| pa <= x && y <= pb),
                            "p={} n={}",
                            p,
                            n
                        );
                    }
                }
                let w = rat(1, 1i64 << n) - rat(1, 1i64 << (n as i64 + p as i64));
                let c = rat(1, 2);
                assert!(lvl
                    .set
                    .intervals()
                    .iter()
                    .any(|(x, y)| *x == &c - &w && *y == &c + &w));
                let bound = (rat(1, 1) - rat(1, 1i64 << p)) * rat(2, 1i64 << n);
                for (x, y) in lvl.set.intervals() {
                    let m = y - x;
                    assert!(m > rat(0, 1) && m <= bound);
                }
                prev = Some(lvl);
            }
        }
    }

    #[test]
    fn membership_examples() {
        let any = SigmaParam::dyadic(4);
        assert!(membership(&a(1, 2), &any, 30));
        let third = SigmaParam::rational(rat(1, 3)).unwrap();
        assert!(membership(&a(1, 6), &third, 20));
        let quarter = SigmaParam::dyadic(2);
        assert!(!membership(&a(1, 4), &quarter, 2));
        let lvl = build_level(&quarter, 8).unwrap();
        for den in 2..=60i64 {
            for num in 0..den {
                let t = a(num, den);
                assert_eq!(
                    membership(&t, &quarter, 8),
                    lvl.contains_angle(&t),
                    "t={}",
                    t
                );
            }
        }
    }

    #[test]
    fn runlength_examples() {
        let w = |s: &str| s.parse::<BinaryWord>().unwrap();
        assert_eq!(membership_runlength(&w("010101010"), 3), RunVerdict::Member);
        assert_eq!(
            membership_runlength(&w("01110100111010"), 3),
            RunVerdict::Member
        );
        // run 111 at position 3, strictness confirmed by later 1s
        assert_eq!(
            membership_runlength(&w("00111000011100"), 3),
            RunVerdict::NotMember
        );
        // deciding run followed only by opposite bits to the end
        assert_eq!(
            membership_runlength(&w("0011100"), 3),
            RunVerdict::InsufficientData
        );
    }

    #[test]
    fn runlength_matches_membership_exhaustively() {
        for p in 2..=4usize {
            let sp = SigmaParam::dyadic(p as u32);
            for len in (p + 4)..=12usize {
                for word in 0u32..(1u32 << len) {
                    let bits: Vec<bool> =
                        (0..len).map(|i| (word >> (len - 1 - i)) & 1 == 1).collect();
                    let w = BinaryWord::new(bits);
                    if let Some(is_member) = membership_runlength(&w, p).decided() {
                        let t = w.as_angle(crate::DyadicTail::Zeros);
                        let depth = (len - p) as u32;
                        assert_eq!(membership(&t, &sp, depth), is_member, "w={} p={}", w, p);
                    }
                }
            }
        }
    }

    #[test]
    fn structure_report_passes() {
        for p in 2..=4 {
            let sp = SigmaParam::dyadic(p);
            let rep = verify_structure(&sp, 10).unwrap();
            assert!(
                rep.all_pass,
                "p={} {:?}",
                p,
                rep.checks.iter().find(|c| !c.pass)
            );
            assert!(rep.distinguished_ratio_attained);
            assert!(rep.boundary_case_ratio_attained);
        }
        assert!(matches!(
            verify_structure(&SigmaParam::rational(rat(1, 3)).unwrap(), 8),
            Err(KsigmaError::RequiresDyadicSigma)
        ));
    }

    #[test]
    fn dim_bounds() {
        assert!(dim_lower_bound(&SigmaParam::dyadic(2)).abs() < 1e-15);
        let b3 = dim_lower_bound(&SigmaParam::dyadic(3));
        assert!((b3 - (1.0 - (2.5f64 / 2.0).log2())).abs() < 1e-12);
        assert!((b3 - 0.67807).abs() < 1e-4);
        let mut prev = 0.0;
        for p in 2..=20 {
            let b = dim_lower_bound(&SigmaParam::dyadic(p));
            assert!(b >= prev);
            prev = b;
        }
        assert!(prev > 0.999);
        assert!(dim_lower_bound_strict(&SigmaParam::rational(rat(2, 5)).unwrap()).is_err());
    }

    #[test]
    fn mass_distribution_weights() {
        let sp = SigmaParam::dyadic(3);
        let md = mass_distribution(&sp, 2, MassStart::Full).unwrap();
        let total: Rat = md.weights.iter().fold(rat(0, 1), |acc, w| acc + w);
        assert_eq!(total, rat(1, 1));
        let m2: u64 = md.intervals.iter().map(|(x, y)| y - x).sum();
        for (iv, w) in md.intervals.iter().zip(&md.weights) {
            assert_eq!(w, &Rat::new(Int::from(iv.1 - iv.0), Int::from(m2)));
        }
        for n in [6, 10] {
            let md = mass_distribution(&sp, n, MassStart::Full).unwrap();
            let total: Rat = md.weights.iter().fold(rat(0, 1), |acc, w| acc + w);
            assert_eq!(total, rat(1, 1));
        }
        let md = mass_distribution(&sp, 12, MassStart::Full).unwrap();
        let c = md.scaled_density_ratio(&sp).to_f64().unwrap();
        assert!(c <= 4.0, "c={}", c);
        let md = mass_distribution(&sp, 8, MassStart::CentralBlock).unwrap();
        let total: Rat = md.weights.iter().fold(rat(0, 1), |acc, w| acc + w);
        assert_eq!(total, rat(1, 1));
    }

    #[test]
    fn porosity_witnesses() {
        let sp = SigmaParam::dyadic(2);
        let w = porosity_witness(&sp, &rat(0, 1), &rat(1, 1)).unwrap();
        assert!(&w.hi - &w.lo >= rat(1, 16));
        let lvl = build_level(&sp, w.generation).unwrap();
        let mid = (&w.lo + &w.hi) / rat(2, 1);
        assert!(!lvl.set.contains(&mid) && !lvl.set.contains(&(mid + rat(1, 1))));

        for (lo, hi) in [
            (rat(0, 1), rat(1, 3)),
            (rat(1, 7), rat(2, 7)),
            (rat(5, 11), rat(6, 11)),
            (rat(1, 100), rat(9, 100)),
        ] {
            let m = &hi - &lo;
            let w = porosity_witness(&sp, &lo, &hi).unwrap();
            assert!(w.lo >= lo && w.hi <= hi, "witness escapes interval");
            assert!((&w.hi - &w.lo) >= (&sp.sigma / rat(4, 1)) * &m);
        }
    }

    #[test]
    fn interval_counts_grow() {
        let sp = SigmaParam::dyadic(4);
        let counts = interval_counts(&sp, 2, 14).unwrap();
        for w in counts.windows(2) {
            assert!(w[1].1 >= w[0].1);
        }
        let est = boxdim_estimate(&sp, 6, 16).unwrap();
        assert!(est.slope > 0.5 && est.slope < 1.0);
    }
}
