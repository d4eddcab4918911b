//! Integrated flow through a panel.
//!
//! Every routine here returns `G = int conj(V) dz` along the target panel
//! curve from its first to its last end point. `G.im` is the net flow through
//! the curve towards its right-hand side (outward for a counter-clockwise
//! body) and `G.re` is the flow along it.
//!
//! The closed forms integrate along the chord between the end points and add
//! `i q w` for every source enclosed between chord and curve, where `w = +1`
//! below a curve that bulges to the right, `-1` above one that bulges left.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{normalized_denominator, LARGE_ROOT_THRESHOLD};
use crate::panel::Panel;
use crate::poly::ComplexPoly;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const LN_EPS: f64 = 39.2;

/// Sources closer than this (relative to the panel length) to the panel or its chord are nudged to the +y side.
pub const TIE_TOLERANCE: f64 = 1e-10;
const NUDGE: f64 = 1e-9;

/// Net outflow part of an integrated flow.
pub fn outflow(g: Complex64) -> f64 {
    g.im
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalExpansion {
    pub center: Complex64,
    /// `p_0 .. p_P`
    pub coeffs: Vec<Complex64>,
    pub radius: f64,
}

impl LocalExpansion {
    pub fn zero(center: Complex64, order: usize, radius: f64) -> Self {
        Self { center, coeffs: vec![ZERO; order + 1], radius }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let d = z - self.center;
        self.coeffs.iter().rev().fold(ZERO, |acc, &p| acc * d + p)
    }
}

/// Global curve position `z_p(length * t)` as a polynomial in `t`.
pub fn curve_poly(panel: &Panel) -> ComplexPoly {
    let rot = panel.rotation();
    let mut c: Vec<Complex64> = Vec::with_capacity(panel.shape.len().max(2));
    let mut lp = 1.0;
    for &a in &panel.shape {
        c.push(rot * I * (a * lp));
        lp *= panel.length;
    }
    if c.len() < 2 {
        c.resize(2, ZERO);
    }
    c[0] += panel.start;
    c[1] += rot * panel.length;
    ComplexPoly::new(c)
}

/// Cheap enclosing disk of the panel curve (not minimal).
pub fn quick_bound(panel: &Panel) -> (Complex64, f64) {
    let half = 0.5 * panel.length;
    let mid = panel.eta(half);
    let mut dev: f64 = 0.0;
    let n = 32;
    for i in 0..=n {
        dev = dev.max((panel.eta(panel.length * i as f64 / n as f64) - mid).abs());
    }
    // allow for the curve peaking between samples
    let h = panel.length / n as f64;
    dev += h * panel.max_slope();
    (panel.to_global(Complex64::new(half, mid)), (half * half + dev * dev).sqrt())
}

fn chord_height(panel: &Panel, x: f64) -> f64 {
    let y0 = panel.eta(0.0);
    let y1 = panel.eta(panel.length);
    y0 + (y1 - y0) * x / panel.length
}

/// `w` for a point in the panel's local frame.
fn lens_winding(panel: &Panel, local: Complex64) -> f64 {
    let (x, y) = (local.re, local.im);
    if !(x > 0.0 && x < panel.length) {
        return 0.0;
    }
    let c = chord_height(panel, x);
    let e = panel.eta(x);
    if c > y && y > e {
        1.0
    } else if e > y && y > c {
        -1.0
    } else {
        0.0
    }
}

/// Moves points that sit on the curve or chord slightly towards +y.
fn nudge_local(panel: &Panel, local: Complex64) -> Complex64 {
    let tol = TIE_TOLERANCE * panel.length;
    let x = local.re;
    if x >= -tol && x <= panel.length + tol {
        let xc = x.clamp(0.0, panel.length);
        if (local.im - panel.eta(xc)).abs() < tol || (local.im - chord_height(panel, xc)).abs() < tol {
            return local + Complex64::new(0.0, NUDGE * panel.length);
        }
    }
    local
}

/// Flow through `panel` from a point source/vortex of strength `q` at `zv`.
pub fn flux_from_point(q: Complex64, zv: Complex64, panel: &Panel) -> Result<Complex64> {
    let z1 = panel.start_point();
    let z2 = panel.end_point();
    let lim = 1e-12 * panel.length.max(1.0);
    for zend in [z1, z2] {
        if (zv - zend).norm() < lim {
            return Err(Error::NearSingularity { distance: (zv - zend).norm(), limit: lim });
        }
    }
    let local = nudge_local(panel, panel.local_coord(zv));
    let zv = panel.to_global(local);
    let w = lens_winding(panel, local);
    Ok(q / (2.0 * PI) * ((z2 - zv) / (z1 - zv)).ln() + I * q * w)
}

/// Flow along the segment `z1 -> z2` from a local expansion.
pub fn flux_from_local(exp: &LocalExpansion, z1: Complex64, z2: Complex64) -> Result<Complex64> {
    let d1 = z1 - exp.center;
    let d2 = z2 - exp.center;
    for d in [d1, d2] {
        if d.norm() > exp.radius {
            return Err(Error::OutOfValidity { distance: d.norm(), radius: exp.radius });
        }
    }
    // sum p_n (d2^{n+1} - d1^{n+1}) / (n+1), with d2^{k} - d1^{k} built incrementally
    let mut p2 = d2;
    let mut p1 = d1;
    let mut sum = ZERO;
    for (n, &p) in exp.coeffs.iter().enumerate() {
        sum += p * (p2 - p1) / (n as f64 + 1.0);
        p2 *= d2;
        p1 *= d1;
    }
    Ok(sum)
}

fn segment_distance(z0: Complex64, z1: Complex64, z2: Complex64) -> f64 {
    let d = z2 - z1;
    let l2 = d.norm_sqr();
    if l2 == 0.0 {
        return (z0 - z1).norm();
    }
    let s = (((z0 - z1) * d.conj()).re / l2).clamp(0.0, 1.0);
    (z0 - (z1 + d * s)).norm()
}

/// Flow along the segment `z1 -> z2` from an outgoing expansion.
pub fn flux_from_multipole(exp: &crate::eval::MultipoleExpansion, z1: Complex64, z2: Complex64) -> Result<Complex64> {
    let dist = segment_distance(exp.center, z1, z2);
    if !(dist > exp.radius) {
        return Err(Error::OutOfValidity { distance: dist, radius: exp.radius });
    }
    let d1 = z1 - exp.center;
    let d2 = z2 - exp.center;
    let mut sum = ZERO;
    if let Some(&f1) = exp.coeffs.first() {
        sum += f1 * (d2 / d1).ln();
    }
    let (u1, u2) = (ONE / d1, ONE / d2);
    let (mut p1, mut p2) = (u1, u2);
    for (k, &f) in exp.coeffs.iter().enumerate().skip(1) {
        // n = k + 1
        sum -= f * (p2 - p1) / k as f64;
        p1 *= u1;
        p2 *= u2;
    }
    Ok(sum / (2.0 * PI))
}

/// A logarithm of `scale * p(t)` that is continuous for `t` in `[0, 1]`
/// (as long as no root lies on the open interval), split by root size.
#[derive(Debug, Clone)]
pub struct LogFactor {
    constant: Complex64,
    small: Vec<Complex64>,
    large: Vec<Complex64>,
}

impl LogFactor {
    pub fn new(p: &ComplexPoly, scale: Complex64) -> Result<Self> {
        let p = p.trimmed();
        let lead = p.leading() * scale;
        if p.degree() == 0 {
            return Ok(Self { constant: lead.ln(), small: vec![], large: vec![] });
        }
        let roots = p.roots()?;
        let (large, small): (Vec<Complex64>, Vec<Complex64>) =
            roots.into_iter().partition(|x| x.norm() > LARGE_ROOT_THRESHOLD);
        let c = large.iter().fold(lead, |acc, &x| acc * -x);
        Ok(Self { constant: c.ln(), small, large })
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        let t = Complex64::new(t, 0.0);
        let mut v = self.constant;
        for &x in &self.small {
            v += (t - x).ln();
        }
        for &x in &self.large {
            v += (ONE - t / x).ln();
        }
        v
    }

    /// `int_0^1 beta(t) L(t) dt`
    pub fn integral(&self, beta: &ComplexPoly) -> Complex64 {
        let b = beta.coeffs();
        let bint = beta.integrate();
        let b1 = bint.eval_real(1.0);
        let mut total = self.constant * b1;
        for &x in &self.small {
            let bx = bint.eval(x);
            let tail = b1 - bx;
            if tail != ZERO {
                total += tail * (ONE - x).ln();
            }
            if bx != ZERO {
                total += bx * (-x).ln();
            }
            let mut s = ZERO;
            let mut poly = ZERO;
            for (j, &bj) in b.iter().enumerate() {
                s = s * x + 1.0 / (j as f64 + 1.0);
                poly += bj / (j as f64 + 1.0) * s;
            }
            total -= poly;
        }
        for &x in &self.large {
            let terms = ((LN_EPS / x.norm().ln()).ceil() as usize).clamp(1, 400);
            let inv = ONE / x;
            let mut xp = ONE;
            for m in 1..=terms {
                xp *= inv;
                let mom: Complex64 = b
                    .iter()
                    .enumerate()
                    .map(|(j, &bj)| bj / (j + m + 1) as f64)
                    .sum();
                total -= xp * mom / m as f64;
            }
        }
        total
    }
}

/// `int_0^length b(zeta) log c(zeta) dzeta` with the branch of the
/// logarithm that is continuous along the interval and principal at its midpoint.
pub fn log_potential_integral(b: &ComplexPoly, c: &ComplexPoly, length: f64) -> Result<Complex64> {
    if !(length > 0.0) {
        return Err(Error::InvalidInput("interval length must be positive".into()));
    }
    let beta = b.scale_arg(length);
    let ct = c.scale_arg(length);
    let f = LogFactor::new(&ct, ONE)?;
    let mut v = f.integral(&beta);
    let cm = ct.eval_real(0.5);
    if cm == ZERO {
        return Err(Error::Geometry("logarithm argument vanishes at the interval midpoint".into()));
    }
    let k = ((f.eval(0.5) - cm.ln()).im / (2.0 * PI)).round();
    if k != 0.0 {
        v -= Complex64::new(0.0, 2.0 * PI * k) * beta.integrate_range(0.0, 1.0);
    }
    Ok(v * length)
}

/// Real roots of `p` in `(0, 1)`.
fn unit_interval_roots(p: &ComplexPoly) -> Vec<f64> {
    let p = p.trimmed();
    if p.degree() == 0 {
        return vec![];
    }
    let scale = p.max_abs();
    p.roots()
        .unwrap_or_default()
        .into_iter()
        .filter(|r| r.im.abs() < 1e-7 && r.re > 0.0 && r.re < 1.0)
        .filter(|r| p.eval_real(r.re).norm() < 1e-6 * scale)
        .map(|r| r.re)
        .collect()
}

/// Geometric part of the flow through `target` induced by `source`; linear
/// in the source strength coefficients, which are supplied to [`PanelFlux::apply`].
#[derive(Debug, Clone)]
pub struct PanelFlux {
    f1: LogFactor,
    f2: LogFactor,
    /// `(t_a, t_b, w - k)` for pieces with a nonzero correction
    pieces: Vec<(f64, f64, f64)>,
    length: f64,
}

impl PanelFlux {
    pub fn new(source: &Panel, target: &Panel) -> Result<Self> {
        let z1 = target.start_point();
        let z2 = target.end_point();
        let scale = source.rotation() * source.length;
        let f1 = LogFactor::new(&normalized_denominator(source, z1), scale)?;
        let f2 = LogFactor::new(&normalized_denominator(source, z2), scale)?;

        let (cs, rs) = quick_bound(source);
        let (ct, rt) = quick_bound(target);
        let near = (cs - ct).norm() <= rs + rt;

        let mut breaks = vec![0.0, 1.0];
        let curve = curve_poly(source);
        if near {
            let unrot = Complex64::from_polar(1.0, -target.angle);
            let local = curve.sub(&ComplexPoly::constant(target.start)).scale(unrot);
            let x = ComplexPoly::new(local.coeffs().iter().map(|c| Complex64::new(c.re, 0.0)).collect());
            let y = ComplexPoly::new(local.coeffs().iter().map(|c| Complex64::new(c.im, 0.0)).collect());
            let y0 = target.eta(0.0);
            let slope = (target.eta(target.length) - y0) / target.length;
            let gap = y.sub(&x.scale(Complex64::new(slope, 0.0))).sub(&ComplexPoly::constant(Complex64::new(y0, 0.0)));
            breaks.extend(unit_interval_roots(&gap));
            breaks.extend(unit_interval_roots(&x));
            breaks.extend(unit_interval_roots(&x.sub(&ComplexPoly::constant(Complex64::new(target.length, 0.0)))));
            breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
            breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        }

        let nudge = I * target.rotation() * (NUDGE * target.length);
        let probe = |t: f64| -> (f64, Complex64) {
            let zv = curve.eval_real(t) + nudge;
            (lens_winding(target, target.local_coord(zv)), ((z2 - zv) / (z1 - zv)).ln())
        };
        let mut pieces = Vec::new();
        for piece in breaks.windows(2) {
            let (ta, tb) = (piece[0], piece[1]);
            if tb - ta <= 0.0 {
                continue;
            }
            let tm = 0.5 * (ta + tb);
            let (w, logratio) = probe(tm);
            let k = ((f2.eval(tm) - f1.eval(tm) - logratio).im / (2.0 * PI)).round();
            if near {
                for frac in [0.1, 0.3, 0.7, 0.9] {
                    let (ws, _) = probe(ta + frac * (tb - ta));
                    if ws != w {
                        return Err(Error::Geometry(
                            "source panel crosses the target panel or only partly lies in its chord region; subdivide".into(),
                        ));
                    }
                }
            }
            if w != k {
                pieces.push((ta, tb, w - k));
            }
        }
        Ok(Self { f1, f2, pieces, length: source.length })
    }

    /// Flow for source strength coefficients `b_j` (in the source's baseline coordinate).
    pub fn apply(&self, strength: &[Complex64]) -> Complex64 {
        let mut f = 1.0;
        let beta = ComplexPoly::new(
            strength
                .iter()
                .map(|&b| {
                    let v = b * f;
                    f *= self.length;
                    v
                })
                .collect(),
        );
        let mut g = (self.f2.integral(&beta) - self.f1.integral(&beta)) * (self.length / (2.0 * PI));
        if !self.pieces.is_empty() {
            let bint = beta.integrate();
            for &(ta, tb, factor) in &self.pieces {
                g += I * factor * (bint.eval_real(tb) - bint.eval_real(ta)) * self.length;
            }
        }
        g
    }
}

/// Flow through `target` induced by the strength of `source`.
pub fn flux_panel_to_panel(source: &Panel, target: &Panel) -> Result<Complex64> {
    let g = PanelFlux::new(source, target)?.apply(&source.strength);
    if !g.is_finite() {
        return Err(Error::Internal("non-finite panel flux".into()));
    }
    Ok(g)
}
