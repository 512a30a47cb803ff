//! Deterministic SVG emitters for the figure subcommands. All coordinates
//! are formatted with fixed precision so repeated runs are byte-identical.

use realrays::ksigma::{build_level, SigmaParam};
use realrays::raytrace::RayPolyline;
use realrays::realslice::Opening;
use realrays::{rat_to_f64, Rat};

fn f(x: f64) -> String {
    format!("{:.6}", x)
}

/// Unit circle with every opening drawn as a thick arc, mirrored to the
/// lower half circle by the angle symmetry.
pub fn openings_circle(openings: &[Opening]) -> String {
    let mut s = String::new();
    s.push_str("<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"-1.2 -1.2 2.4 2.4\">\n");
    s.push_str("<circle cx=\"0\" cy=\"0\" r=\"1\" fill=\"none\" stroke=\"#888\" stroke-width=\"0.01\"/>\n");
    let arc = |a0: f64, a1: f64, color: &str| -> String {
        let (x0, y0) = ((std::f64::consts::TAU * a0).cos(), -(std::f64::consts::TAU * a0).sin());
        let (x1, y1) = ((std::f64::consts::TAU * a1).cos(), -(std::f64::consts::TAU * a1).sin());
        let large = if a1 - a0 > 0.5 { 1 } else { 0 };
        format!(
            "<path d=\"M {} {} A 1 1 0 {} 0 {} {}\" fill=\"none\" stroke=\"{}\" stroke-width=\"0.05\"/>\n",
            f(x0), f(y0), large, f(x1), f(y1), color
        )
    };
    for o in openings {
        let a0 = o.theta_minus.to_f64();
        let a1 = o.omega_minus.to_f64();
        s.push_str(&arc(a0, a1, "#d62728"));
        // mirrored opening on the conjugate side
        s.push_str(&arc(1.0 - a1, 1.0 - a0, "#1f77b4"));
    }
    s.push_str("</svg>\n");
    s
}

/// Stacked interval diagram of the hierarchy levels: one row per level, the
/// standard nested-construction picture.
pub fn ksigma_stack(sp: &SigmaParam, n_max: u32) -> String {
    let mut s = String::new();
    let row_h = 12.0;
    let width = 1000.0;
    let height = row_h * ((n_max - 1) as f64) + 10.0;
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {} {}\">\n",
        f(width),
        f(height)
    ));
    for n in 2..=n_max {
        let lvl = build_level(sp, n).expect("level in range");
        let y = row_h * ((n - 2) as f64) + 5.0;
        for (a, b) in lvl.set.intervals() {
            // unrolled coordinates live on [1/4, 5/4): wrap for display
            let (af, bf) = (rat_to_f64(a), rat_to_f64(b));
            let segs: Vec<(f64, f64)> = if bf <= 1.0 {
                vec![(af, bf)]
            } else if af >= 1.0 {
                vec![(af - 1.0, bf - 1.0)]
            } else {
                vec![(af, 1.0), (0.0, bf - 1.0)]
            };
            for (x0, x1) in segs {
                s.push_str(&format!(
                    "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#2ca02c\"/>\n",
                    f(x0 * width),
                    f(y),
                    f((x1 - x0) * width),
                    f(row_h * 0.7)
                ));
            }
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Ray polylines over the dynamical plane viewport.
pub fn ray_overlay(rays: &[RayPolyline], viewport: f64) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\">\n",
        f(-viewport),
        f(-viewport),
        f(2.0 * viewport),
        f(2.0 * viewport)
    ));
    s.push_str(&format!(
        "<line x1=\"{}\" y1=\"0\" x2=\"{}\" y2=\"0\" stroke=\"#ccc\" stroke-width=\"0.01\"/>\n",
        f(-viewport),
        f(viewport)
    ));
    let colors = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#8c564b"];
    for (i, ray) in rays.iter().enumerate() {
        let mut d = String::new();
        for (k, (x, y)) in ray.points.iter().enumerate() {
            let cmd = if k == 0 { 'M' } else { 'L' };
            d.push_str(&format!("{} {} {} ", cmd, f(*x), f(-*y)));
        }
        s.push_str(&format!(
            "<path d=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"0.015\"/>\n",
            d.trim_end(),
            colors[i % colors.len()]
        ));
    }
    s.push_str("</svg>\n");
    s
}

/// Binary grayscale PPM (P5).
pub fn ppm_gray(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", width, height).into_bytes();
    out.extend_from_slice(pixels);
    out
}

/// Interval CSV: `lo,hi` as exact rational strings.
pub fn interval_csv(intervals: &[(Rat, Rat)]) -> String {
    let mut s = String::from("lo,hi\n");
    for (a, b) in intervals {
        s.push_str(&format!("{}/{},{}/{}\n", a.numer(), a.denom(), b.numer(), b.denom()));
    }
    s
}
