//! Kneading machinery for real quadratics `x -> x^2 + c`: certified sign
//! itineraries of the critical value's orbit, the angle function `tau`
//! produced by the itinerary recurrence, its inverse by monotone bisection
//! with plateau resolution, and critical-orbit distance diagnostics.
//!
//! All orbit computations run in ball arithmetic: a sign is only emitted when
//! the enclosure excludes zero, and eventual periodicity is only used when a
//! full period of strict ball containments certifies an attracting cycle.

use std::fmt;

use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::angle::{Angle, BinaryWord, DyadicTail};
use crate::ball::Ball;
use crate::realslice::{in_r, Opening};
use crate::{Int, Rat};

/// Default working precision in bits; doubled adaptively on demand.
pub const DEFAULT_PREC: u32 = 128;
/// Hard cap for the adaptive precision ladder.
pub const PREC_CAP: u32 = 1 << 14;

#[derive(Debug, Error)]
pub enum KneadError {
    #[error("parameter outside the real slice [-2, 1/4]")]
    OutOfRange,
    #[error("orbit point at step {step} indistinguishable from 0 at {precision} bits")]
    HitCriticalPoint { step: usize, precision: u32 },
    #[error("orbit escaped past modulus 2 at step {step}")]
    Escape { step: usize },
    #[error("angle {0} is not in the real-ray angle set")]
    NotInR(Angle),
    #[error("bisection could not resolve the comparison: {0}")]
    NonConvergence(String),
    #[error("tolerance must be positive")]
    BadTolerance,
}

/// A real parameter in `[-2, 1/4]` with a working-precision hint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RealParam {
    c: Rat,
    prec: u32,
}

impl RealParam {
    pub fn new(c: Rat) -> Result<Self, KneadError> {
        if c < Rat::from_integer(Int::from(-2)) || c > Rat::new(Int::one(), Int::from(4)) {
            return Err(KneadError::OutOfRange);
        }
        Ok(RealParam {
            c,
            prec: DEFAULT_PREC,
        })
    }

    pub fn with_prec(mut self, prec: u32) -> Self {
        self.prec = prec.max(32);
        self
    }

    pub fn value(&self) -> &Rat {
        &self.c
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn to_f64(&self) -> f64 {
        self.c.to_f64().unwrap_or(f64::NAN)
    }
}

/// Orbit sign, `+` or `-`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", if *self == Sign::Plus { '+' } else { '-' })
    }
}

/// A certified finite sign itinerary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Itinerary {
    pub signs: Vec<Sign>,
}

impl fmt::Display for Itinerary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.signs {
            write!(f, "{}", s)?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Certified orbit runs
// ---------------------------------------------------------------------------

/// Certificate that the sign sequence is eventually periodic: for every
/// residue `r < period`, the ball at `start + r + period` is strictly
/// contained in the ball at `start + r`, so each class is trapped and the
/// signs repeat forever.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CycleCert {
    pub start: usize,
    pub period: usize,
}

/// Why an orbit run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum StopReason {
    Completed,
    SignUncertified { step: usize },
    Escaped { step: usize },
}

#[derive(Debug)]
pub(crate) struct OrbitRun {
    pub signs: Vec<i8>,
    pub cycle: Option<CycleCert>,
    /// Certified lower bound on `min |x_i|` over the emitted steps.
    pub min_abs: f64,
    pub stopped: StopReason,
}

/// Interval fixed-point certificate: an inflated hull of two nearby orbit
/// enclosures that maps strictly into itself after `q` steps traps the true
/// orbit and certifies an eventually q-periodic sign sequence.
fn attempt_cycle_cert(xk: &Ball, xi: &Ball, cb: &Ball, q: usize, fail_count: u32) -> bool {
    let extra = 8u64 << (2 * fail_count).min(40);
    let hull = Ball::hull(xk, xi).inflate(3, extra);
    let mut y = hull.clone();
    for _ in 0..q {
        if y.signum_certified().is_none() {
            return false;
        }
        y = y.square_add(cb);
    }
    hull.contains_strict(&y)
}

/// Runs the orbit of the critical value (`x_0 = c`) for up to `steps` steps
/// at fixed precision, emitting certified signs and stopping early when a
/// sign cannot be certified. With `find_cycle`, searches for a certified
/// attracting cycle and stops as soon as a certificate holds.
pub(crate) fn run_orbit(
    c: &Rat,
    steps: usize,
    prec: u32,
    find_cycle: bool,
    qmax: usize,
) -> OrbitRun {
    let cb = Ball::from_rat(c, prec);
    let mut x = cb.clone();
    let mut signs: Vec<i8> = Vec::new();
    let mut min_abs = f64::INFINITY;
    let mut history: Vec<Ball> = Vec::new();
    let mut screen: Vec<(f64, f64)> = Vec::new(); // 53-bit center/radius views
    let mut last_attempt: Vec<usize> = vec![0; qmax + 1];
    let mut fails: Vec<u32> = vec![0; qmax + 1];
    let mut stopped = StopReason::Completed;

    for i in 0..steps {
        match x.signum_certified() {
            Some(s) => signs.push(s),
            None => {
                stopped = StopReason::SignUncertified { step: i };
                break;
            }
        }
        if x.abs_exceeds(2) {
            stopped = StopReason::Escaped { step: i };
            break;
        }
        min_abs = min_abs.min(x.abs_lower_f64());
        if find_cycle {
            let (cf, rf) = x.approx53();
            for q in 1..=qmax.min(i) {
                let k = i - q;
                // proximity screen; the +32 absorbs the 53-bit windowing
                if (cf - screen[k].0).abs() > 4.0 * (rf + screen[k].1) + 32.0 {
                    continue;
                }
                if i - last_attempt[q] < q {
                    continue;
                }
                last_attempt[q] = i;
                if attempt_cycle_cert(&history[k], &x, &cb, q, fails[q]) {
                    // reduce to the smallest certifiable divisor period
                    let mut period = q;
                    for d in 1..q {
                        if q % d == 0 && attempt_cycle_cert(&history[i - d], &x, &cb, d, 2) {
                            period = d;
                            break;
                        }
                    }
                    return OrbitRun {
                        signs,
                        cycle: Some(CycleCert {
                            start: i - period,
                            period,
                        }),
                        min_abs,
                        stopped,
                    };
                }
                fails[q] += 1;
            }
            history.push(x.clone());
            screen.push((cf, rf));
        }
        x = x.square_add(&cb);
    }
    OrbitRun {
        signs,
        cycle: None,
        min_abs,
        stopped,
    }
}

/// Adaptive-precision certified orbit: doubles the working precision until
/// every requested sign is certified or the cap is reached.
fn run_orbit_adaptive(
    c: &Rat,
    steps: usize,
    start_prec: u32,
    prec_cap: u32,
    find_cycle: bool,
    qmax: usize,
) -> Result<(OrbitRun, u32), KneadError> {
    let mut prec = start_prec.max(denom_bits(c) + 64).max(64);
    loop {
        let run = run_orbit(c, steps, prec, find_cycle, qmax);
        match run.stopped {
            StopReason::Completed => return Ok((run, prec)),
            StopReason::SignUncertified { step } => {
                if prec >= prec_cap {
                    return Err(KneadError::HitCriticalPoint {
                        step,
                        precision: prec,
                    });
                }
                prec = (prec * 2).min(prec_cap);
            }
            StopReason::Escaped { step } => return Err(KneadError::Escape { step }),
        }
    }
}

fn denom_bits(c: &Rat) -> u32 {
    c.denom().bits() as u32
}

/// Certified sign itinerary of the orbit of the critical value.
pub fn itinerary(c: &RealParam, n: usize) -> Result<Itinerary, KneadError> {
    assert!(n >= 1);
    let (run, _) = run_orbit_adaptive(&c.c, n, c.prec, PREC_CAP, false, 0)?;
    Ok(Itinerary {
        signs: run
            .signs
            .iter()
            .map(|&s| if s > 0 { Sign::Plus } else { Sign::Minus })
            .collect(),
    })
}

fn signs_to_bits(signs: &[i8], nbits: usize) -> Vec<bool> {
    let mut bits = Vec::with_capacity(nbits);
    let mut b = false; // t_0 = 0
    bits.push(b);
    for &s in signs.iter().take(nbits.saturating_sub(1)) {
        if s < 0 {
            b = !b;
        }
        bits.push(b);
    }
    bits
}

/// The angle word of a real parameter: `nbits` leading bits of the angle
/// whose dynamic ray lands at the orbit of the critical value.
///
/// Two parameters sharing the first `n` itinerary signs produce angles within
/// `2^-(n+1)` of each other, so the word is accurate to its length.
pub fn tau(c: &RealParam, nbits: usize) -> Result<BinaryWord, KneadError> {
    assert!(nbits >= 1);
    let (run, _) = run_orbit_adaptive(&c.c, nbits.saturating_sub(1), c.prec, PREC_CAP, false, 0)?;
    Ok(BinaryWord::new(signs_to_bits(&run.signs, nbits)))
}

/// Angle data for a parabolic root: the angles of the rays landing at the
/// component's root and at the left endpoint of its real trace.
#[derive(Debug, Clone, Serialize)]
pub struct ParabolicAngles {
    pub root_angle: Angle,
    pub left_end_angle: Angle,
}

/// The exact angle values at the two parabolic boundary points of a real
/// hyperbolic component, bypassing the sign recurrence entirely.
pub fn tau_parabolic(o: &Opening) -> ParabolicAngles {
    ParabolicAngles {
        root_angle: o.theta_minus.clone(),
        left_end_angle: o.omega_minus.clone(),
    }
}

// ---------------------------------------------------------------------------
// tau with plateau certificates
// ---------------------------------------------------------------------------

/// Outcome of a certified comparison of `tau(mid)` against a target angle.
#[derive(Debug, Clone)]
enum TauCmp {
    /// `tau(mid) < t`, decided at the given agreement length.
    Less { agreed: usize },
    /// `tau(mid) > t`.
    Greater { agreed: usize },
    /// `tau(mid) = t` exactly; the parameter lies on a plateau whose
    /// attracting cycle has the given certified period.
    PlateauEqual { cycle_period: usize },
    /// All certified bits agree but no periodicity certificate exists.
    Undecided { agreed: usize },
    /// Sign certification failed up to the precision cap.
    SignFailure,
}

struct TauComparator {
    /// Target bits (the unique expansion, or the ones-tail one for 1/2).
    t_bits: Vec<bool>,
    t: Angle,
    depth: usize,
    qmax: usize,
    cycle_budget: usize,
    prec_cap: u32,
}

impl TauComparator {
    fn new(t: &Angle, depth: usize, qmax: usize) -> Self {
        let tail = if *t == Angle::half() {
            DyadicTail::Ones
        } else {
            DyadicTail::Zeros
        };
        TauComparator {
            t_bits: t.binary_expansion(depth + 2, tail).bits().to_vec(),
            t: t.clone(),
            depth,
            qmax,
            cycle_budget: 20_000,
            prec_cap: 4096,
        }
    }

    fn compare(&self, mid: &Rat) -> TauCmp {
        let steps = self.depth.max(64).max(self.cycle_budget);
        let mut prec = DEFAULT_PREC.max(denom_bits(mid) + 64);
        loop {
            let run = run_orbit(mid, steps, prec, true, self.qmax);
            if let Some(cert) = run.cycle {
                // exact eventually periodic value: prefix of start+1 bits,
                // then a block of 2*period bits repeating (the second period
                // of signs is the certified replica of the first)
                let mut signs = run.signs.clone();
                while signs.len() < cert.start + 2 * cert.period {
                    signs.push(signs[signs.len() - cert.period]);
                }
                let nbits = cert.start + 1 + 2 * cert.period;
                let bits = signs_to_bits(&signs, nbits);
                let exact = BinaryWord::new(bits).as_angle_with_period(2 * cert.period);
                return match exact.cmp(&self.t) {
                    std::cmp::Ordering::Less => TauCmp::Less { agreed: 0 },
                    std::cmp::Ordering::Greater => TauCmp::Greater { agreed: 0 },
                    std::cmp::Ordering::Equal => TauCmp::PlateauEqual {
                        cycle_period: cert.period,
                    },
                };
            }
            // the word comparison may already be decisive on whatever
            // certified bits exist
            let bits = signs_to_bits(&run.signs, self.depth.min(run.signs.len() + 1));
            for (i, &b) in bits.iter().enumerate() {
                if b != self.t_bits[i] {
                    return if b {
                        TauCmp::Greater { agreed: i }
                    } else {
                        TauCmp::Less { agreed: i }
                    };
                }
            }
            if let StopReason::Escaped { .. } = run.stopped {
                // beyond the slice end: angle below every target
                return TauCmp::Less { agreed: 0 };
            }
            if run.signs.len() + 1 < self.depth {
                if let StopReason::SignUncertified { .. } = run.stopped {
                    if prec < self.prec_cap {
                        prec = (prec * 2).min(self.prec_cap);
                        continue;
                    }
                    return TauCmp::SignFailure;
                }
            }
            return TauCmp::Undecided { agreed: bits.len() };
        }
    }
}

// ---------------------------------------------------------------------------
// pi: the inverse of tau
// ---------------------------------------------------------------------------

/// How the parameter was located.
#[derive(Debug, Clone, Serialize)]
pub enum PiRoute {
    /// Plain certified bisection (non-parabolic targets).
    Bisection,
    /// Bisection to a coarse bracket, then a Newton solve of the parabolic
    /// system at the stated period and multiplier.
    ParabolicNewton {
        period: u32,
        multiplier: i8,
        residual: f64,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct PiResult {
    /// Located parameter (an exact dyadic rational).
    #[serde(with = "crate::rat_serde")]
    pub c: Rat,
    /// Guaranteed bracket half-width around the true landing parameter.
    #[serde(with = "crate::rat_serde")]
    pub error_bound: Rat,
    pub route: PiRoute,
    /// Certified agreement (bits) between the angle word at `c` and the
    /// target, when measured.
    pub tau_agreement_bits: Option<usize>,
}

/// Tuning knobs for [`pi`].
#[derive(Debug, Clone)]
pub struct PiOptions {
    /// Bits of angle-word agreement requested of the returned parameter for
    /// non-parabolic targets (round-trip quality).
    pub roundtrip_bits: usize,
    /// Comparison depth ceiling (bits).
    pub max_depth: usize,
    /// Bisection iteration ceiling.
    pub max_iters: usize,
}

impl Default for PiOptions {
    fn default() -> Self {
        PiOptions {
            roundtrip_bits: 48,
            max_depth: 4096,
            max_iters: 3000,
        }
    }
}

/// Inverse of the angle function on the real-ray angle set: locates the real
/// boundary parameter whose angle is `t`, within `tol`.
///
/// Odd-denominator angles land at parabolic roots and are polished by a
/// Newton solve of the parabolic-cycle system; other rational angles are
/// located by certified bisection, which continues past `tol` until the
/// returned parameter's own angle word agrees with `t` to round-trip quality.
pub fn pi(t: &Angle, tol: &Rat) -> Result<PiResult, KneadError> {
    pi_with(t, tol, &PiOptions::default())
}

pub fn pi_with(t: &Angle, tol: &Rat, opts: &PiOptions) -> Result<PiResult, KneadError> {
    pi_impl(t, tol, opts).map(|(r, _)| r)
}

/// A located parabolic boundary point: the landing parameter of an
/// odd-denominator angle together with the parabolic periodic point at which
/// its dynamic ray lands.
#[derive(Debug, Clone, Serialize)]
pub struct ParabolicPoint {
    #[serde(with = "crate::rat_serde")]
    pub c: Rat,
    #[serde(with = "crate::rat_serde")]
    pub dynamic_root: Rat,
    pub period: u32,
    pub multiplier: i8,
}

/// Locates the parabolic root for an odd-denominator angle, returning both
/// the parameter and the dynamic root point.
pub fn parabolic_locate(t: &Angle, tol: &Rat) -> Result<ParabolicPoint, KneadError> {
    let folded = t.fold_to_half();
    if folded.denom().is_even() {
        return Err(KneadError::NonConvergence(
            "angle does not land at a parabolic root (even denominator)".into(),
        ));
    }
    let (res, z) = pi_impl(&folded, tol, &PiOptions::default())?;
    let z = z.ok_or_else(|| {
        KneadError::NonConvergence("no parabolic solve performed for this angle".into())
    })?;
    match res.route {
        PiRoute::ParabolicNewton {
            period, multiplier, ..
        } => Ok(ParabolicPoint {
            c: res.c,
            dynamic_root: z,
            period,
            multiplier,
        }),
        _ => Err(KneadError::NonConvergence(
            "bisection did not reach the parabolic solve".into(),
        )),
    }
}

fn pi_impl(t: &Angle, tol: &Rat, opts: &PiOptions) -> Result<(PiResult, Option<Rat>), KneadError> {
    if tol <= &Rat::zero() {
        return Err(KneadError::BadTolerance);
    }
    let t = t.fold_to_half();
    if !in_r(&t) {
        return Err(KneadError::NotInR(t));
    }
    let odd = t.denom().is_odd();
    let p = if odd {
        t.doubling_period().unwrap() as usize
    } else {
        0
    };

    let mut lo = Rat::from_integer(Int::from(-2));
    let mut hi = Rat::new(Int::one(), Int::from(4));
    let mut inside_sample: Option<Rat> = None; // plateau midpoint with q = p
    let mut parent_sample: Option<Rat> = None; // plateau midpoint with q = p/2
    let coarse = Rat::new(Int::one(), Int::from(1 << 8));
    let mut depth = 96usize;
    let mut skew_num = 1i64; // midpoint skew applied after undecidable probes
    let mut lo_agreed: Option<usize> = None;
    let mut hi_agreed: Option<usize> = None;

    for _ in 0..opts.max_iters {
        let width = &hi - &lo;
        if odd {
            if width <= coarse && inside_sample.is_some() {
                return newton_polish(&t, p as u32, &lo, &hi, inside_sample, parent_sample, tol)
                    .map(|(r, z)| (r, Some(z)));
            }
            if &width <= tol {
                // no interior sample found: accept the bracket as-is
                let c = (&lo + &hi) / Rat::from_integer(Int::from(2));
                return Ok((
                    PiResult {
                        c,
                        error_bound: width.clone(),
                        route: PiRoute::Bisection,
                        tau_agreement_bits: None,
                    },
                    None,
                ));
            }
        } else if &width <= tol {
            // candidate endpoints must satisfy the round-trip goal
            for (cand, slot) in [(&lo, &mut lo_agreed), (&hi, &mut hi_agreed)] {
                if slot.is_none() {
                    let cmp = TauComparator::new(&t, opts.roundtrip_bits + 8, 128);
                    *slot = match cmp.compare(cand) {
                        TauCmp::PlateauEqual { .. } => Some(usize::MAX),
                        TauCmp::Less { agreed }
                        | TauCmp::Greater { agreed }
                        | TauCmp::Undecided { agreed } => Some(agreed),
                        TauCmp::SignFailure => Some(0),
                    };
                }
            }
            let best = if lo_agreed >= hi_agreed {
                (lo.clone(), lo_agreed)
            } else {
                (hi.clone(), hi_agreed)
            };
            if best.1.unwrap_or(0) >= opts.roundtrip_bits {
                return Ok((
                    PiResult {
                        c: best.0,
                        error_bound: width.clone(),
                        route: PiRoute::Bisection,
                        tau_agreement_bits: best.1,
                    },
                    None,
                ));
            }
            // keep halving to improve the round-trip agreement
            lo_agreed = None;
            hi_agreed = None;
        }

        let mid = &lo + &width * Rat::new(Int::from(32 + skew_num), Int::from(64));
        let cmp = TauComparator::new(&t, depth, 128).compare(&mid);
        match cmp {
            TauCmp::Greater { .. } => {
                lo = mid;
                skew_num = 1;
            }
            TauCmp::Less { .. } => {
                hi = mid;
                skew_num = 1;
            }
            TauCmp::PlateauEqual { cycle_period } => {
                if !odd {
                    return Err(KneadError::NonConvergence(format!(
                        "even-denominator target hit a plateau of period {}",
                        cycle_period
                    )));
                }
                if cycle_period == p {
                    inside_sample = Some(mid.clone());
                    lo = mid;
                } else if cycle_period * 2 == p {
                    parent_sample = Some(mid.clone());
                    hi = mid;
                } else if cycle_period < p {
                    // coarser plateau with equal angle cannot occur; be safe
                    return Err(KneadError::NonConvergence(format!(
                        "unexpected plateau period {} for target period {}",
                        cycle_period, p
                    )));
                } else {
                    // deeper cycle sharing the angle value: treat as inside
                    inside_sample = Some(mid.clone());
                    lo = mid;
                }
                skew_num = 1;
            }
            TauCmp::Undecided { .. } => {
                if depth < opts.max_depth {
                    depth *= 2;
                } else {
                    // likely sitting exactly on the landing parameter or a
                    // parabolic point: skew the midpoint and retry
                    skew_num = if skew_num >= 0 { -skew_num - 2 } else { -skew_num + 2 };
                    if skew_num.abs() >= 30 {
                        return Err(KneadError::NonConvergence(
                            "comparison undecidable at depth cap".into(),
                        ));
                    }
                }
            }
            TauCmp::SignFailure => {
                // midpoint indistinguishable from a superstable center
                skew_num = if skew_num >= 0 { -skew_num - 2 } else { -skew_num + 2 };
                if skew_num.abs() >= 30 {
                    return Err(KneadError::NonConvergence(
                        "orbit signs uncertifiable near midpoint".into(),
                    ));
                }
            }
        }
    }
    Err(KneadError::NonConvergence("iteration budget exhausted".into()))
}

// ---------------------------------------------------------------------------
// Newton polish for parabolic targets
// ---------------------------------------------------------------------------

/// Decides the parabolic system for an odd-denominator angle: satellite
/// roots sit at a flip (multiplier -1) of the half-period cycle, primitive
/// roots at a fold (multiplier +1) of the full-period cycle.
fn parabolic_kind(t: &Angle, p: u32) -> (u32, i8) {
    if p % 2 == 0 {
        let q = p / 2;
        let m = (Int::one() << q) + 1;
        if (t.as_rat() * Rat::from_integer(m)).is_integer() {
            return (q, -1);
        }
    }
    (p, 1)
}

fn newton_polish(
    t: &Angle,
    p: u32,
    lo: &Rat,
    hi: &Rat,
    inside_sample: Option<Rat>,
    parent_sample: Option<Rat>,
    tol: &Rat,
) -> Result<(PiResult, Rat), KneadError> {
    let (q, mult) = parabolic_kind(t, p);
    // f64 seeds: cycle point from forward iteration at a plateau sample
    let c_seed = match (mult, &parent_sample, &inside_sample) {
        (-1, Some(cs), _) => cs.clone(),
        (_, _, Some(cs)) => cs.clone(),
        _ => (lo + hi) / Rat::from_integer(Int::from(2)),
    };
    let c0 = c_seed.to_f64().unwrap();
    let mut z0 = 0.0f64;
    for _ in 0..8192 {
        z0 = z0 * z0 + c0;
    }
    // land on the cycle point with the right phase: pick the orbit point
    // closest to itself after q more steps
    let mut best = (f64::INFINITY, z0);
    let mut z = z0;
    for _ in 0..q {
        let mut w = z;
        for _ in 0..q {
            w = w * w + c0;
        }
        if (w - z).abs() < best.0 {
            best = ((w - z).abs(), z);
        }
        z = z * z + c0;
    }

    let prec: u32 = 360;
    let mut zb = Ball::from_rat(&f64_to_rat(best.1), prec).discard_radius();
    let mut cb = Ball::from_rat(&c_seed, prec).discard_radius();
    let target = Ball::exact_int(mult as i64, prec);
    for _ in 0..80 {
        let (fz, u, v, w, s) = parabolic_system(&zb, &cb, q, prec);
        // F1 = Q^q(z) - z, F2 = (Q^q)'(z) - mult
        let f1 = fz.sub(&zb);
        let f2 = u.sub(&target);
        let one = Ball::exact_int(1, prec);
        let j11 = u.sub(&one);
        let det = j11.mul(&s).sub(&v.mul(&w));
        let dz = match s.mul(&f1).sub(&v.mul(&f2)).div(&det) {
            Some(x) => x.discard_radius(),
            None => break,
        };
        let dc = match j11.mul(&f2).sub(&w.mul(&f1)).div(&det) {
            Some(x) => x.discard_radius(),
            None => break,
        };
        zb = zb.sub(&dz).discard_radius();
        cb = cb.sub(&dc).discard_radius();
        if dz.to_f64().abs() < 1e-60 && dc.to_f64().abs() < 1e-60 {
            break;
        }
    }
    // final residual at the polished point
    let (fz, u, _, _, _) = parabolic_system(&zb, &cb, q, prec);
    let residual = fz
        .sub(&zb)
        .to_f64()
        .abs()
        .max(u.sub(&target).to_f64().abs());

    let c_found = Rat::new(cb.center().clone(), Int::one() << prec);
    let slack = hi - lo;
    if residual > 1e-40 || c_found < lo - &slack || c_found > hi + &slack {
        return Err(KneadError::NonConvergence(format!(
            "parabolic solve failed: residual {:.3e}",
            residual
        )));
    }
    // round to a compact dyadic near the requested tolerance
    let c_rounded = round_dyadic(&c_found, tol);
    let z_found = Rat::new(zb.center().clone(), Int::one() << prec);
    Ok((
        PiResult {
            c: c_rounded,
            error_bound: tol.clone(),
            route: PiRoute::ParabolicNewton {
                period: q,
                multiplier: mult,
                residual,
            },
            tau_agreement_bits: None,
        },
        z_found,
    ))
}

/// Evaluates `Q_c^q(z)` together with its first derivatives `u = d/dz`,
/// `v = d/dc` and the derivatives of `u`: `w = du/dz`, `s = du/dc`.
fn parabolic_system(z: &Ball, c: &Ball, q: u32, prec: u32) -> (Ball, Ball, Ball, Ball, Ball) {
    let mut zz = z.clone();
    let mut u = Ball::exact_int(1, prec);
    let mut v = Ball::exact_int(0, prec);
    let mut w = Ball::exact_int(0, prec);
    let mut s = Ball::exact_int(0, prec);
    let one = Ball::exact_int(1, prec);
    for _ in 0..q {
        let two_z = zz.mul_i64(2);
        let new_w = two_z.mul(&w).add(&u.mul(&u).mul_i64(2)).discard_radius();
        let new_s = two_z.mul(&s).add(&u.mul(&v).mul_i64(2)).discard_radius();
        let new_u = two_z.mul(&u).discard_radius();
        let new_v = two_z.mul(&v).add(&one).discard_radius();
        zz = zz.square_add(c).discard_radius();
        u = new_u;
        v = new_v;
        w = new_w;
        s = new_s;
    }
    (zz, u, v, w, s)
}

fn f64_to_rat(x: f64) -> Rat {
    Rat::from_float(x).unwrap_or_else(Rat::zero)
}

/// Rounds to the dyadic grid two binary orders finer than `tol`.
fn round_dyadic(x: &Rat, tol: &Rat) -> Rat {
    let mut k: u32 = 2;
    let mut step = Rat::new(Int::one(), Int::from(4));
    while &step > tol && k < 400 {
        step = step / Rat::from_integer(Int::from(2));
        k += 1;
    }
    let scale = Int::one() << (k + 2);
    let n = (x * Rat::from_integer(scale.clone())).round().to_integer();
    Rat::new(n, scale)
}

// ---------------------------------------------------------------------------
// Critical-orbit distance
// ---------------------------------------------------------------------------

/// Certified lower bound on the distance from the critical point to its
/// forward orbit within `n` steps: `min |x_i|` for the first `n` orbit points
/// of the critical value.
pub fn nonrecurrence_depth(c: &RealParam, n: usize) -> Result<f64, KneadError> {
    assert!(n >= 1);
    let (run, _) = run_orbit_adaptive(&c.c, n, c.prec, PREC_CAP, false, 0)?;
    Ok(run.min_abs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;
    use crate::realslice::enumerate_openings;

    fn param(s: &str) -> RealParam {
        RealParam::new(crate::parse_decimal(s).unwrap()).unwrap()
    }

    #[test]
    fn itinerary_examples() {
        let c = RealParam::new(rat(-2, 1)).unwrap();
        let it = itinerary(&c, 5).unwrap();
        assert_eq!(it.to_string(), "-++++");

        let c = RealParam::new(rat(1, 8)).unwrap();
        assert_eq!(itinerary(&c, 5).unwrap().to_string(), "+++++");

        // center of the period-2 component: orbit hits 0
        let c = RealParam::new(rat(-1, 1)).unwrap();
        assert!(matches!(
            itinerary(&c, 5),
            Err(KneadError::HitCriticalPoint { step: 1, .. })
        ));
    }

    #[test]
    fn tau_special_values() {
        let c = RealParam::new(rat(-2, 1)).unwrap();
        let w = tau(&c, 24).unwrap();
        assert_eq!(w.to_string(), "011111111111111111111111");
        let c = RealParam::new(rat(1, 4)).unwrap();
        assert_eq!(tau(&c, 16).unwrap().to_string(), "0000000000000000");
        // interior negative parameters in the main component give 1/3
        let c = RealParam::new(rat(-1, 2)).unwrap();
        let w = tau(&c, 16).unwrap();
        assert_eq!(w.to_string(), "0101010101010101");
    }

    #[test]
    fn tau_airplane_root() {
        // parabolic root of the period-3 component: word is 0.(011)
        let c = RealParam::new(rat(-7, 4)).unwrap();
        let w = tau(&c, 18).unwrap();
        assert_eq!(w.to_string(), "011011011011011011");
        // and the opening-based route agrees
        let openings = enumerate_openings(3);
        let o3 = openings.iter().find(|o| o.p == 3).unwrap();
        assert_eq!(tau_parabolic(o3).root_angle, Angle::new(3, 7));
        assert_eq!(tau_parabolic(o3).left_end_angle, Angle::new(4, 9));
    }

    #[test]
    fn tau_feigenbaum_six_decimals() {
        let c = param("-1.401155");
        let w = tau(&c, 26).unwrap();
        assert!((w.to_f64() - 0.412454).abs() < 1e-4, "{}", w.to_f64());
    }

    #[test]
    fn tau_error_bound_under_perturbation() {
        let base = param("-1.739292");
        let nearby = param("-1.7392920000001");
        let w1 = tau(&base, 40).unwrap();
        let w2 = tau(&nearby, 40).unwrap();
        // shared certified signs imply closeness of the angle words
        let mut shared = 0;
        for i in 0..40 {
            if w1.bit(i) == w2.bit(i) {
                shared += 1;
            } else {
                break;
            }
        }
        assert!(shared >= 20, "agreement {}", shared);
        assert!((w1.to_f64() - w2.to_f64()).abs() <= 2f64.powi(-(shared as i32)));
    }

    #[test]
    fn tau_monotone_on_samples() {
        // tau is non-increasing in c
        let mut prev = f64::INFINITY;
        for k in 0..60 {
            let c = RealParam::new(rat(-2, 1) + rat(9, 4) * rat(k, 60)).unwrap();
            let w = match tau(&c, 30) {
                Ok(w) => w,
                Err(_) => continue, // superstable centers along the sweep
            };
            let v = w.to_f64();
            assert!(
                v <= prev + 2f64.powi(-28),
                "tau increased at sample {}: {} -> {}",
                k,
                prev,
                v
            );
            prev = v;
        }
    }

    #[test]
    fn pi_endpoints() {
        let tol = rat(1, 10_000_000_000i64);
        let r = pi(&Angle::half(), &tol).unwrap();
        assert_eq!(r.c, rat(-2, 1));

        let r = pi(&Angle::zero(), &tol).unwrap();
        assert!((r.c.to_f64().unwrap() - 0.25).abs() < 1e-10, "{:?}", r);
    }

    #[test]
    fn pi_airplane() {
        let tol = rat(1, 100_000_000i64);
        let r = pi(&Angle::new(3, 7), &tol).unwrap();
        assert!(
            (r.c.to_f64().unwrap() + 1.75).abs() < 1e-8,
            "pi(3/7) = {:?}",
            r
        );
        match r.route {
            PiRoute::ParabolicNewton {
                period, multiplier, ..
            } => {
                assert_eq!((period, multiplier), (3, 1));
            }
            _ => panic!("expected parabolic route"),
        }
    }

    #[test]
    fn pi_basilica_satellite() {
        // satellite root: flip of the fixed point at -3/4
        let tol = rat(1, 1_000_000i64);
        let r = pi(&Angle::new(1, 3), &tol).unwrap();
        assert!(
            (r.c.to_f64().unwrap() + 0.75).abs() < 1e-6,
            "pi(1/3) = {:?}",
            r
        );
        match r.route {
            PiRoute::ParabolicNewton {
                period, multiplier, ..
            } => {
                assert_eq!((period, multiplier), (1, -1));
            }
            _ => panic!("expected parabolic route"),
        }
        // doubled satellite: flip of the period-2 cycle at -5/4
        let r = pi(&Angle::new(2, 5), &tol).unwrap();
        assert!(
            (r.c.to_f64().unwrap() + 1.25).abs() < 1e-6,
            "pi(2/5) = {:?}",
            r
        );
    }

    #[test]
    fn pi_period_five_window() {
        let tol = rat(1, 100_000_000i64);
        let r = pi(&Angle::new(15, 31), &tol).unwrap();
        let c = r.c.to_f64().unwrap();
        assert!((-1.9860..=-1.9850).contains(&c), "pi(15/31) = {}", c);
    }

    #[test]
    fn pi_misiurewicz_roundtrip() {
        let tol = rat(1, 10_000_000_000i64);
        for t in [Angle::new(5, 12), Angle::new(23, 48), Angle::new(7, 16)] {
            if !in_r(&t) {
                continue;
            }
            let r = pi(&t, &tol).unwrap();
            let c = RealParam::new(r.c.clone()).unwrap();
            let w = tau(&c, 52).unwrap();
            let err = (w.to_f64() - t.to_f64()).abs();
            assert!(err <= 1e-9, "t={} err={}", t, err);
        }
    }

    #[test]
    fn pi_rejects_non_members() {
        let tol = rat(1, 1000);
        assert!(matches!(
            pi(&Angle::new(3, 8), &tol),
            Err(KneadError::NotInR(_))
        ));
    }

    #[test]
    fn nonrecurrence_examples() {
        let c = RealParam::new(rat(-2, 1)).unwrap();
        let d = nonrecurrence_depth(&c, 100).unwrap();
        assert!((d - 2.0).abs() < 1e-12);

        let c = RealParam::new(rat(-7, 4)).unwrap();
        let d = nonrecurrence_depth(&c, 100).unwrap();
        assert!(d > 0.02 && d < 0.04, "airplane min distance {}", d);
    }
}
