//! Inverse-iteration tracing of dynamic rays for real quadratic parameters,
//! used to verify numerically that the ray at a computed angle lands where
//! the combinatorics says it must.
//!
//! Branch selection is driven by exact rational angle bookkeeping: the
//! pullback at step j must have external angle equal to the (depth-j)-th
//! doubling iterate of the traced angle, and the square root whose argument
//! is circle-closest to that target is taken. Pullbacks contract, so f64
//! arithmetic holds the stated tolerances with ample margin.

use num_complex::Complex64;
use num_traits::ToPrimitive;
use serde::Serialize;
use thiserror::Error;

use crate::angle::Angle;
use crate::kneading::{tau, KneadError, RealParam};
use crate::Rat;

#[derive(Debug, Error)]
pub enum RayError {
    #[error("start radius must be at least 4")]
    BadStartRadius,
    #[error("depth must be at least 1")]
    BadDepth,
    #[error("square-root branches indistinguishable at pullback {step}")]
    BranchAmbiguity { step: usize },
    #[error(transparent)]
    Knead(#[from] KneadError),
}

/// A traced dynamic ray: points from the start circle inward, with the exact
/// external angle at every pullback depth.
#[derive(Debug, Clone, Serialize)]
pub struct RayPolyline {
    pub c: f64,
    pub start_radius: f64,
    pub depth: usize,
    /// Point `k` approximates the ray at potential `log(r0) / 2^k`.
    pub points: Vec<(f64, f64)>,
    /// `angles[k]` is the external angle of `points[k]`; squaring a point
    /// and adding `c` recovers the previous point.
    pub angles: Vec<Angle>,
}

impl RayPolyline {
    pub fn endpoint(&self) -> (f64, f64) {
        *self.points.last().unwrap()
    }

    /// Largest violation of the defining pullback relation
    /// `point_{k+1}^2 + c = point_k`.
    pub fn pullback_defect(&self) -> f64 {
        let c = Complex64::new(self.c, 0.0);
        self.points
            .windows(2)
            .map(|w| {
                let outer = Complex64::new(w[0].0, w[0].1);
                let inner = Complex64::new(w[1].0, w[1].1);
                (inner * inner + c - outer).norm()
            })
            .fold(0.0, f64::max)
    }
}

fn circle_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Traces the dynamic ray at angle `t` by `depth` inverse iterations from
/// the circle of radius `r0`, where the escape coordinate and the argument
/// agree to high accuracy.
pub fn trace_ray(c: &Rat, t: &Angle, depth: usize, r0: f64) -> Result<RayPolyline, RayError> {
    if r0 < 4.0 {
        return Err(RayError::BadStartRadius);
    }
    if depth == 0 {
        return Err(RayError::BadDepth);
    }
    let cf = c.to_f64().ok_or(RayError::BadStartRadius)?;
    let cc = Complex64::new(cf, 0.0);
    // exact doubling orbit: angles[i] = 2^i t (mod 1)
    let mut fwd = Vec::with_capacity(depth + 1);
    let mut a = t.clone();
    for _ in 0..=depth {
        fwd.push(a.clone());
        a = a.double();
    }
    let start_angle = fwd[depth].to_f64();
    let mut z = Complex64::from_polar(r0, std::f64::consts::TAU * start_angle);
    let mut points = vec![(z.re, z.im)];
    let mut angles = vec![fwd[depth].clone()];
    for j in 1..=depth {
        let target = &fwd[depth - j];
        let tf = target.to_f64();
        let w = (z - cc).sqrt();
        let cand = [w, -w];
        let d0 = circle_dist(cand[0].arg() / std::f64::consts::TAU, tf);
        let d1 = circle_dist(cand[1].arg() / std::f64::consts::TAU, tf);
        if (d0 - d1).abs() < 1e-12 {
            return Err(RayError::BranchAmbiguity { step: j });
        }
        z = if d0 < d1 { cand[0] } else { cand[1] };
        points.push((z.re, z.im));
        angles.push(target.clone());
    }
    Ok(RayPolyline {
        c: cf,
        start_radius: r0,
        depth,
        points,
        angles,
    })
}

/// Landing verification: traces the ray at the parameter's own angle and
/// reports the distance between the ray end and the expected landing point.
#[derive(Debug, Clone, Serialize)]
pub struct LandingReport {
    pub c: f64,
    pub angle_bits: usize,
    pub depth: usize,
    pub endpoint: (f64, f64),
    pub target: (f64, f64),
    pub residual: f64,
}

/// Generic (non-parabolic) landing check: the ray at the angle computed from
/// the parameter's itinerary should land at the critical value itself.
pub fn verify_landing(c: &RealParam, nbits: usize, depth: usize) -> Result<LandingReport, RayError> {
    assert!(nbits > depth + 4, "need guard bits beyond the pullback depth");
    let word = tau(c, nbits)?;
    let t = word.as_angle(crate::angle::DyadicTail::Zeros);
    let ray = trace_ray(c.value(), &t, depth, 100.0)?;
    let (ex, ey) = ray.endpoint();
    let cf = c.to_f64();
    let residual = ((ex - cf).powi(2) + ey * ey).sqrt();
    Ok(LandingReport {
        c: cf,
        angle_bits: nbits,
        depth,
        endpoint: (ex, ey),
        target: (cf, 0.0),
        residual,
    })
}

/// Landing check against an explicitly supplied target point (used for
/// parabolic roots, where the ray lands at the dynamic root rather than at
/// the critical value).
pub fn verify_landing_at(
    c: &Rat,
    t: &Angle,
    target: (f64, f64),
    depth: usize,
) -> Result<LandingReport, RayError> {
    let ray = trace_ray(c, t, depth, 100.0)?;
    let (ex, ey) = ray.endpoint();
    let residual = ((ex - target.0).powi(2) + (ey - target.1).powi(2)).sqrt();
    Ok(LandingReport {
        c: c.to_f64().unwrap_or(f64::NAN),
        angle_bits: 0,
        depth,
        endpoint: (ex, ey),
        target,
        residual,
    })
}

/// Grayscale escape-time image of the dynamical plane, row-major, one byte
/// per pixel (0 = immediate escape, 255 = bounded within the iteration cap).
pub fn escape_time_image(
    c: f64,
    center: (f64, f64),
    half_extent: f64,
    width: usize,
    height: usize,
    max_iter: u32,
) -> Vec<u8> {
    let mut img = vec![0u8; width * height];
    for row in 0..height {
        for col in 0..width {
            let x = center.0 + (2.0 * col as f64 / (width - 1) as f64 - 1.0) * half_extent;
            let y = center.1 + (1.0 - 2.0 * row as f64 / (height - 1) as f64) * half_extent;
            let mut z = Complex64::new(x, y);
            let mut it = 0u32;
            while it < max_iter && z.norm_sqr() <= 4.0 {
                z = z * z + c;
                it += 1;
            }
            img[row * width + col] = ((255 * it) / max_iter) as u8;
        }
    }
    img
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;

    #[test]
    fn chebyshev_rays() {
        // angle 0 lands at the right fixed point 2
        let ray = trace_ray(&rat(-2, 1), &Angle::zero(), 40, 100.0).unwrap();
        let (x, y) = ray.endpoint();
        assert!(((x - 2.0).powi(2) + y * y).sqrt() < 1e-6);
        // angle 1/2 lands at the left end -2
        let ray = trace_ray(&rat(-2, 1), &Angle::half(), 40, 100.0).unwrap();
        let (x, y) = ray.endpoint();
        assert!(((x + 2.0).powi(2) + y * y).sqrt() < 1e-6);
    }

    #[test]
    fn circle_ray_is_radial() {
        let ray = trace_ray(&rat(0, 1), &Angle::new(1, 3), 40, 100.0).unwrap();
        let (x, y) = ray.endpoint();
        let t = std::f64::consts::TAU / 3.0;
        assert!(((x - t.cos()).powi(2) + (y - t.sin()).powi(2)).sqrt() < 1e-6);
    }

    #[test]
    fn pullback_relation_holds() {
        for (c, t) in [
            (rat(-2, 1), Angle::new(1, 2)),
            (rat(-3, 2), Angle::new(5, 12)),
            (rat(1, 4), Angle::new(1, 7)),
        ] {
            let ray = trace_ray(&c, &t, 36, 100.0).unwrap();
            assert!(ray.pullback_defect() < 1e-9, "defect {}", ray.pullback_defect());
        }
    }

    #[test]
    fn conjugate_symmetry() {
        let c = rat(-7, 4);
        let t = Angle::new(3, 7);
        let ray = trace_ray(&c, &t, 36, 100.0).unwrap();
        let conj = trace_ray(&c, &t.complement(), 36, 100.0).unwrap();
        for (p, q) in ray.points.iter().zip(conj.points.iter()) {
            assert!((p.0 - q.0).abs() < 1e-10);
            assert!((p.1 + q.1).abs() < 1e-10);
        }
    }

    #[test]
    fn angle_bookkeeping_is_exact() {
        let t = Angle::new(5, 12);
        let ray = trace_ray(&rat(-3, 2), &t, 20, 100.0).unwrap();
        // angles run backwards along the doubling orbit
        for (k, a) in ray.angles.iter().enumerate() {
            let mut expect = t.clone();
            for _ in 0..(20 - k) {
                expect = expect.double();
            }
            assert_eq!(*a, expect);
        }
        assert_eq!(ray.angles.last().unwrap(), &t);
    }

    #[test]
    fn landing_at_critical_value() {
        let c = RealParam::new(rat(-2, 1)).unwrap();
        let rep = verify_landing(&c, 60, 40).unwrap();
        assert!(rep.residual < 1e-6, "residual {}", rep.residual);
    }

    #[test]
    fn escape_image_smoke() {
        let img = escape_time_image(-1.0, (0.0, 0.0), 2.0, 64, 64, 64);
        assert_eq!(img.len(), 64 * 64);
        // the critical point is bounded, corners escape
        assert_eq!(img[32 * 64 + 32], 255);
        assert!(img[0] < 16);
    }
}
