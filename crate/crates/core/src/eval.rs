//! Velocity induced by a panel.
//!
//! Near field: the defining integral is written in `t = zeta / length` as
//! `conj V = e^{-i theta} / (2 pi) * int_0^1 beta(t) / E(t) dt` and integrated in
//! closed form after factoring `E`. Far field: an outgoing expansion about the
//! panel's bounding circle.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::Panel;
use crate::poly::{residues, roots_paired, ComplexPoly};
use crate::series::Jet;

pub const FAR_FACTOR: f64 = 1.8;
pub const DEFAULT_TOLERANCE: f64 = 1e-12;
/// Roots beyond this many panel lengths are expanded in a geometric series.
pub const LARGE_ROOT_THRESHOLD: f64 = 2.0;
/// Evaluations closer than this fraction of the panel length to an end point are rejected.
pub const ENDPOINT_EXCLUSION: f64 = 1e-6;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
/// `ln(1e17)`
const LN_EPS: f64 = 39.2;

/// Counters for which root paths were taken.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalStats {
    pub evaluations: usize,
    pub large_roots: usize,
    pub paired_roots: usize,
    pub paired_fallbacks: usize,
}

impl EvalStats {
    pub fn merge(&mut self, o: &EvalStats) {
        self.evaluations += o.evaluations;
        self.large_roots += o.large_roots;
        self.paired_roots += o.paired_roots;
        self.paired_fallbacks += o.paired_fallbacks;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultipoleExpansion {
    pub center: Complex64,
    /// `f_1 .. f_P`
    pub coeffs: Vec<Complex64>,
    pub radius: f64,
}

impl MultipoleExpansion {
    pub fn order(&self) -> usize {
        self.coeffs.len()
    }
}

/// Expansion order for a requested truncation tolerance.
pub fn expansion_order(tolerance: f64) -> usize {
    ((1.0 / tolerance).ln() / FAR_FACTOR.ln()).ceil() as usize + 2
}

/// `E(t) = (z' - z_p(length * t)) / length` with trailing structural zeros removed.
pub fn normalized_denominator(panel: &Panel, z: Complex64) -> ComplexPoly {
    let i = Complex64::new(0.0, 1.0);
    let lam = panel.length;
    let zp = panel.local_coord(z);
    let mut e = Vec::with_capacity(panel.shape.len().max(2));
    e.push((zp - i * panel.shape[0]) / lam);
    let a1 = panel.shape.get(1).copied().unwrap_or(0.0);
    e.push(-(ONE + i * a1));
    let mut lp = lam;
    for &a in panel.shape.iter().skip(2) {
        e.push(-i * a * lp);
        lp *= lam;
    }
    // structural zeros are judged against the shape terms only, not e0
    let scale = e[1..].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let deg = ComplexPoly::new(e.clone()).degree_with_scale(scale).max(1);
    e.truncate(deg + 1);
    ComplexPoly::new(e)
}

/// `int_0^1 dt / (t - x)` on the principal branch.
fn ell(x: Complex64) -> Complex64 {
    ((x - 1.0) / x).ln()
}

/// Sign of the branch jump picked up moving straight from `m` to `x` across the cut `(0, 1)`.
fn cut_crossing(m: Complex64, x: Complex64) -> f64 {
    let above = |c: Complex64| c.im >= 0.0;
    if above(m) == above(x) {
        return 0.0;
    }
    let r = m.re - m.im * (x.re - m.re) / (x.im - m.im);
    if r > 0.0 && r < 1.0 {
        if above(m) {
            1.0
        } else {
            -1.0
        }
    } else {
        0.0
    }
}

/// `int_0^1 P(t) / prod (t - x_k) dt` for a root cluster `(a, b)` together
/// with the other roots, as the divided difference of `phi * ell`.
fn paired_contribution(h: &ComplexPoly, others: &[Complex64], a: Complex64, b: Complex64) -> Option<Complex64> {
    let m = (a + b) * 0.5;
    let d = (a - b) * 0.5;
    let mut rho = m.norm().min((m - 1.0).norm());
    for &c in others {
        rho = rho.min((c - m).norm());
    }
    let dn = d.norm();
    if dn > 0.5 * rho {
        return None;
    }
    let k = if dn == 0.0 { 2 } else { ((LN_EPS / (rho / dn).ln()).ceil() as usize + 1).clamp(2, 80) };
    let shifted = h.shift(m);
    let mut hc: Vec<Complex64> = shifted.coeffs().to_vec();
    hc.resize(k + 1, ZERO);
    hc.truncate(k + 1);
    let mut phi = Jet::new(hc);
    if !others.is_empty() {
        let mut pc: Vec<Complex64> = ComplexPoly::from_roots(others).shift(m).into_coeffs();
        pc.resize(k + 1, ZERO);
        pc.truncate(k + 1);
        phi = phi.div(&Jet::new(pc));
    }
    let mut lc = vec![ell(m)];
    let (mut p1, mut p0) = (ONE, ONE);
    let (i1, i0) = (ONE / (m - 1.0), ONE / m);
    for n in 1..=k {
        p1 *= i1;
        p0 *= i0;
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        lc.push((p1 - p0) * (sign / n as f64));
    }
    let psi = phi.mul(&Jet::new(lc));
    let d2 = d * d;
    let mut dd = ZERO;
    let mut dp = ONE;
    for n in (1..=k).step_by(2) {
        dd += psi.c[n] * dp;
        dp *= d2;
    }
    if !dd.is_finite() {
        return None;
    }
    let phi_at = |x: Complex64| h.eval(x) / others.iter().fold(ONE, |acc, &c| acc * (x - c));
    let two_pi_i = Complex64::new(0.0, 2.0 * PI);
    let sa = cut_crossing(m, a);
    let sb = cut_crossing(m, b);
    if sa != 0.0 || sb != 0.0 {
        dd -= two_pi_i * (phi_at(a) * sa - phi_at(b) * sb) / (a - b);
    }
    Some(dd)
}

/// `int_0^1 beta(t) / E(t) dt`.
pub(crate) fn quotient_integral(beta: &ComplexPoly, e: &ComplexPoly, stats: &mut EvalStats) -> Result<Complex64> {
    let lead = e.coeffs()[e.coeffs().len() - 1];
    let roots = e.roots()?;
    let (large, small): (Vec<Complex64>, Vec<Complex64>) =
        roots.iter().partition(|x| x.norm() > LARGE_ROOT_THRESHOLD);

    // 1/(t - x) = -(1/x) sum (t/x)^m for the large roots
    let mut num = beta.clone();
    if !large.is_empty() {
        stats.large_roots += large.len();
        let rmin = large.iter().map(|x| x.norm()).fold(f64::INFINITY, f64::min);
        let terms = ((LN_EPS / rmin.ln()).ceil() as usize + 2 * large.len()).min(400);
        let mut series = ComplexPoly::constant(ONE);
        for &x in &large {
            let inv = ONE / x;
            let mut c = Vec::with_capacity(terms + 1);
            let mut p = -inv;
            for _ in 0..=terms {
                c.push(p);
                p *= inv;
            }
            series = series.mul_truncated(&ComplexPoly::new(c), terms);
        }
        num = num.mul(&series);
    }
    if small.is_empty() {
        return Ok(num.integrate_range(0.0, 1.0) / lead);
    }

    let (q, h) = num.divide(&ComplexPoly::from_roots(&small))?;
    let mut total = q.integrate_range(0.0, 1.0);

    let n = small.len();
    let mut partner: Vec<Option<usize>> = vec![None; n];
    let mut crowded = vec![false; n];
    for j in 0..n {
        for k in (j + 1)..n {
            if roots_paired(small[j], small[k], 1.0) || roots_paired(small[k], small[j], 1.0) {
                if partner[j].is_some() || partner[k].is_some() {
                    crowded[j] = true;
                    crowded[k] = true;
                }
                partner[j] = Some(k);
                partner[k] = Some(j);
            }
        }
    }
    let plain = residues(&h, &small);
    let mut done = vec![false; n];
    for j in 0..n {
        if done[j] {
            continue;
        }
        if let Some(k) = partner[j] {
            if !crowded[j] && !crowded[k] {
                let others: Vec<Complex64> =
                    (0..n).filter(|&i| i != j && i != k).map(|i| small[i]).collect();
                if let Some(v) = paired_contribution(&h, &others, small[j], small[k]) {
                    stats.paired_roots += 2;
                    total += v;
                    done[j] = true;
                    done[k] = true;
                    continue;
                }
            }
            stats.paired_fallbacks += 1;
        }
        total += plain[j] * ell(small[j]);
        done[j] = true;
    }
    Ok(total / lead)
}

fn check_endpoints(panel: &Panel, z: Complex64) -> Result<()> {
    let limit = ENDPOINT_EXCLUSION * panel.length;
    for p in [panel.start_point(), panel.end_point()] {
        let d = (z - p).norm();
        if d < limit {
            return Err(Error::NearSingularity { distance: d, limit });
        }
    }
    Ok(())
}

/// Conjugate velocity from the exact panel integral.
pub fn velocity_direct(panel: &Panel, z: Complex64) -> Result<Complex64> {
    velocity_direct_stats(panel, z, &mut EvalStats::default())
}

pub fn velocity_direct_stats(panel: &Panel, z: Complex64, stats: &mut EvalStats) -> Result<Complex64> {
    if !z.is_finite() {
        return Err(Error::InvalidInput("evaluation point must be finite".into()));
    }
    check_endpoints(panel, z)?;
    stats.evaluations += 1;
    let e = normalized_denominator(panel, z);
    let beta = ComplexPoly::new(panel.normalized_strength());
    let v = quotient_integral(&beta, &e, stats)?;
    let out = Complex64::from_polar(1.0 / (2.0 * PI), -panel.angle) * v;
    if !out.is_finite() {
        return Err(Error::Internal("non-finite panel velocity".into()));
    }
    Ok(out)
}

/// Panel point minus `z0` as a polynomial in `s = t - 1/2`.
pub(crate) fn centered_offset(panel: &Panel, z0: Complex64) -> ComplexPoly {
    let i = Complex64::new(0.0, 1.0);
    let rot = panel.rotation();
    let lam = panel.length;
    let mut c: Vec<Complex64> = Vec::with_capacity(panel.shape.len().max(2));
    let mut lp = 1.0;
    for (k, &a) in panel.shape.iter().enumerate() {
        c.push(rot * i * (a * lp));
        lp *= lam;
        let _ = k;
    }
    if c.len() < 2 {
        c.resize(2, ZERO);
    }
    c[0] += panel.start - z0;
    c[1] += rot * lam;
    ComplexPoly::new(c).shift(Complex64::new(0.5, 0.0))
}

fn integrate_centered(p: &ComplexPoly) -> Complex64 {
    // int_{-1/2}^{1/2} s^k ds vanishes for odd k
    let mut sum = ZERO;
    let mut h = 0.5;
    for (k, &c) in p.coeffs().iter().enumerate() {
        if k % 2 == 0 {
            sum += c * (2.0 * h / (k as f64 + 1.0));
        }
        h *= 0.5;
    }
    sum
}

/// `f_n = int b(zeta) (z_p(zeta) - z0)^{n-1} dzeta` for `n = 1..=order`.
pub fn outgoing_coefficients(panel: &Panel, z0: Complex64, order: usize) -> Vec<Complex64> {
    let w = centered_offset(panel, z0);
    let beta = ComplexPoly::new(panel.normalized_strength()).shift(Complex64::new(0.5, 0.0));
    let mut pow = beta;
    let mut out = Vec::with_capacity(order);
    for _ in 0..order {
        out.push(integrate_centered(&pow) * panel.length);
        pow = pow.mul(&w);
    }
    out
}

pub fn outgoing_expansion(panel: &Panel, z0: Complex64, order: usize) -> Result<MultipoleExpansion> {
    if order == 0 {
        return Err(Error::InvalidInput("expansion order must be at least 1".into()));
    }
    let (c, r) = panel.bounding_circle();
    Ok(MultipoleExpansion {
        center: z0,
        coeffs: outgoing_coefficients(panel, z0, order),
        radius: (c - z0).norm() + r,
    })
}

/// Expansion about the panel's bounding-circle center.
pub fn panel_expansion(panel: &Panel, order: usize) -> Result<MultipoleExpansion> {
    let (c, _) = panel.bounding_circle();
    outgoing_expansion(panel, c, order)
}

pub fn eval_expansion(exp: &MultipoleExpansion, z: Complex64) -> Result<Complex64> {
    let d = z - exp.center;
    let dist = d.norm();
    if !(dist > exp.radius) {
        return Err(Error::OutOfValidity { distance: dist, radius: exp.radius });
    }
    let u = ONE / d;
    let s = exp.coeffs.iter().rev().fold(ZERO, |acc, &f| (acc + f) * u);
    Ok(s / (2.0 * PI))
}

/// A panel with its outgoing expansion, dispatching between near and far evaluation.
#[derive(Debug, Clone)]
pub struct PanelEvaluator {
    pub panel: Panel,
    pub expansion: MultipoleExpansion,
    pub far_factor: f64,
}

impl PanelEvaluator {
    pub fn new(panel: Panel, tolerance: f64) -> Result<Self> {
        let expansion = panel_expansion(&panel, expansion_order(tolerance))?;
        Ok(Self { panel, expansion, far_factor: FAR_FACTOR })
    }

    pub fn is_far(&self, z: Complex64) -> bool {
        (z - self.expansion.center).norm() > self.far_factor * self.expansion.radius
    }

    pub fn velocity(&self, z: Complex64) -> Result<Complex64> {
        self.velocity_stats(z, &mut EvalStats::default())
    }

    pub fn velocity_stats(&self, z: Complex64, stats: &mut EvalStats) -> Result<Complex64> {
        if self.is_far(z) {
            eval_expansion(&self.expansion, z)
        } else {
            velocity_direct_stats(&self.panel, z, stats)
        }
    }
}

/// Near/far dispatch with the default tolerance.
pub fn velocity(panel: &Panel, z: Complex64) -> Result<Complex64> {
    PanelEvaluator::new(panel.clone(), DEFAULT_TOLERANCE)?.velocity(z)
}

/// Sum of conjugate velocities from several panels.
pub fn velocity_sum(evaluators: &[PanelEvaluator], z: Complex64) -> Result<Complex64> {
    evaluators.iter().try_fold(ZERO, |acc, e| Ok(acc + e.velocity(z)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::adaptive_gauss_kronrod;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    struct Lcg(u64);
    impl Lcg {
        fn next(&mut self) -> f64 {
            self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((self.0 >> 11) as f64) / ((1u64 << 53) as f64)
        }
        fn sym(&mut self) -> f64 {
            2.0 * self.next() - 1.0
        }
    }

    fn random_panel(rng: &mut Lcg, m: usize, n: usize) -> Panel {
        let lam = 0.5 + rng.next();
        let mut shape = vec![0.0];
        for k in 1..=m {
            shape.push(0.4 * rng.sym() / lam.powi(k as i32 - 1));
        }
        let strength = (0..=n).map(|j| c(rng.sym(), rng.sym()) / lam.powi(j as i32)).collect();
        Panel::new(c(rng.sym(), rng.sym()), PI * rng.sym(), lam, shape, strength).unwrap()
    }

    fn oracle(panel: &Panel, z: Complex64) -> Complex64 {
        let zp = panel.local_coord(z);
        let f = |zeta: f64| panel.gamma(zeta) / (zp - c(zeta, panel.eta(zeta)));
        let (v, _) = adaptive_gauss_kronrod(&f, 0.0, panel.length, 1e-14, 0.0);
        Complex64::from_polar(1.0 / (2.0 * PI), -panel.angle) * v
    }

    /// Point at distance roughly `dist` from the panel curve.
    fn point_near(panel: &Panel, rng: &mut Lcg, dist: f64) -> Complex64 {
        let zeta = panel.length * (0.02 + 0.96 * rng.next());
        let s = panel.eta_derivative(zeta);
        let n = c(-s, 1.0) / (1.0 + s * s).sqrt();
        let side = if rng.next() < 0.5 { 1.0 } else { -1.0 };
        panel.to_global(c(zeta, panel.eta(zeta)) + n * (side * dist))
    }

    #[test]
    fn flat_constant_panel_closed_form() {
        let p = Panel::new(c(0.5, -0.3), 0.6, 1.7, vec![0.0], vec![c(0.8, -0.4)]).unwrap();
        for z in [c(3.0, 2.0), c(0.9, 0.1), c(-2.0, -5.0)] {
            let zp = p.local_coord(z);
            let want = c(0.8, -0.4) * Complex64::from_polar(1.0 / (2.0 * PI), -0.6) * (zp / (zp - 1.7)).ln();
            let got = velocity_direct(&p, z).unwrap();
            assert!((got - want).norm() < 1e-14 * (1.0 + want.norm()), "{got} vs {want}");
        }
    }

    #[test]
    fn shrinking_panel_tends_to_point_formula() {
        let q = c(1.0, 0.5);
        let z = c(1.0, 2.0);
        let mut prev = f64::INFINITY;
        for lam in [0.1, 0.05, 0.025] {
            let start = c(-lam / 2.0, 0.0);
            let p = Panel::new(start, 0.0, lam, vec![0.0], vec![q / lam]).unwrap();
            let point = q / (2.0 * PI * z);
            let err = (velocity_direct(&p, z).unwrap() - point).norm();
            assert!(err < lam * lam);
            assert!(err < prev / 3.0);
            prev = err;
        }
    }

    #[test]
    fn matches_quadrature_oracle() {
        let mut rng = Lcg(11);
        for (m, n) in [(1, 0), (2, 3), (3, 3), (5, 4), (7, 7), (3, 7)] {
            for _ in 0..4 {
                let p = random_panel(&mut rng, m, n);
                for dist in [1e-3, 0.05, 0.3, 2.0, 20.0, 100.0] {
                    let z = point_near(&p, &mut rng, dist * p.length);
                    let got = velocity_direct(&p, z).unwrap();
                    let want = oracle(&p, z);
                    let rel = (got - want).norm() / want.norm();
                    assert!(rel < 1e-10, "M={m} N={n} dist={dist}: rel {rel:e}");
                }
            }
        }
    }

    #[test]
    fn paired_root_path_matches_oracle() {
        // eta = a (zeta - 1/2)^2 has a near-double root pair just off the curve near its apex
        let mut stats = EvalStats::default();
        // the two roots merge when z sits at the focus of the parabola
        for a in [0.5, 1.0, 1.5] {
            let shape = vec![0.25 * a, -a, a];
            let p = Panel::new(c(0.0, 0.0), 0.0, 1.0, shape, vec![c(1.0, 0.3), c(-0.2, 0.1), c(0.4, 0.0)]).unwrap();
            for delta in [1e-3, -1e-3, 1e-6, 0.0, -0.02, 0.02] {
                let z = c(0.5, (1.0 + delta) / (4.0 * a));
                let got = velocity_direct_stats(&p, z, &mut stats).unwrap();
                let want = oracle(&p, z);
                assert!((got - want).norm() < 1e-10 * want.norm(), "a={a} delta={delta}: {got} vs {want}");
            }
        }
        assert!(stats.paired_roots > 0);
    }

    #[test]
    fn large_root_path_engages_far_away() {
        let mut rng = Lcg(5);
        let p = random_panel(&mut rng, 7, 5);
        let mut stats = EvalStats::default();
        let z = p.start + 1e4 * p.length * c(0.6, 0.8);
        let direct = velocity_direct_stats(&p, z, &mut stats).unwrap();
        let far = eval_expansion(&panel_expansion(&p, 20).unwrap(), z).unwrap();
        assert!((direct - far).norm() < 1e-8 * far.norm());
        assert!(stats.large_roots > 0);
    }

    #[test]
    fn near_endpoint_rejected() {
        let p = Panel::new(c(0.0, 0.0), 0.0, 1.0, vec![0.0, 0.1, 0.2], vec![c(1.0, 0.0)]).unwrap();
        let e = velocity_direct(&p, p.end_point() + c(1e-8, 0.0));
        assert!(matches!(e, Err(Error::NearSingularity { .. })));
        assert!(velocity_direct(&p, c(f64::NAN, 0.0)).is_err());
    }

    #[test]
    fn jump_condition_across_sheet() {
        let mut rng = Lcg(3);
        for _ in 0..5 {
            let p = random_panel(&mut rng, 3, 2);
            let zeta = 0.5 * p.length;
            let s = p.eta_derivative(zeta);
            let tangent = p.rotation() * c(1.0, s) / (1.0 + s * s).sqrt();
            let normal = tangent * c(0.0, 1.0);
            let z = p.point(zeta);
            let h = 1e-4 * p.length;
            let up = velocity_direct(&p, z + normal * h).unwrap().conj();
            let down = velocity_direct(&p, z - normal * h).unwrap().conj();
            let jump = (up - down) / tangent;
            let g = p.tangential_gamma(zeta);
            // tangential jump carries the vortex part, normal jump the source part
            let want = c(g.im, g.re);
            assert!((jump - want).norm() < 1e-3 * (1.0 + want.norm()), "{jump} vs {want}");
        }
    }

    #[test]
    fn superposition_of_split_panels() {
        let mut rng = Lcg(17);
        for _ in 0..5 {
            let p = random_panel(&mut rng, 5, 4);
            let (a, b) = p.split(0.37 * p.length).unwrap();
            for dist in [0.01, 0.2, 3.0] {
                let z = point_near(&p, &mut rng, dist * p.length);
                if (z - a.end_point()).norm() < 0.01 * p.length {
                    continue;
                }
                let whole = velocity_direct(&p, z).unwrap();
                let parts = velocity_direct(&a, z).unwrap() + velocity_direct(&b, z).unwrap();
                assert!((whole - parts).norm() < 1e-11 * (1.0 + whole.norm()));
            }
        }
    }

    #[test]
    fn expansion_basics() {
        let zero = MultipoleExpansion { center: c(0.0, 0.0), coeffs: vec![ZERO; 4], radius: 1.0 };
        assert_eq!(eval_expansion(&zero, c(3.0, 0.0)).unwrap(), ZERO);
        let unit = MultipoleExpansion { center: c(1.0, 1.0), coeffs: vec![c(2.0 * PI, 0.0)], radius: 0.5 };
        let z = c(2.0, 3.0);
        assert!((eval_expansion(&unit, z).unwrap() - ONE / (z - c(1.0, 1.0))).norm() < 1e-15);
        assert!(matches!(eval_expansion(&unit, c(1.2, 1.0)), Err(Error::OutOfValidity { .. })));

        let mut rng = Lcg(23);
        let p = random_panel(&mut rng, 3, 3);
        let f = outgoing_coefficients(&p, c(0.1, 0.2), 3);
        assert!((f[0] - p.total_strength()).norm() < 1e-13);
        let flat = Panel::new(c(-1.0, 0.0), 0.0, 2.0, vec![0.0], vec![c(1.5, 0.5)]).unwrap();
        let f = outgoing_coefficients(&flat, c(0.0, 0.0), 2);
        assert!(f[1].norm() < 1e-15);
        assert!(outgoing_expansion(&flat, ZERO, 0).is_err());
    }

    #[test]
    fn expansion_matches_direct() {
        let mut rng = Lcg(29);
        for _ in 0..5 {
            let p = random_panel(&mut rng, 5, 5);
            let e = panel_expansion(&p, expansion_order(DEFAULT_TOLERANCE)).unwrap();
            for k in 0..8 {
                let z = e.center + 5.0 * e.radius * Complex64::from_polar(1.0, k as f64);
                let d = velocity_direct(&p, z).unwrap();
                let f = eval_expansion(&e, z).unwrap();
                assert!((d - f).norm() < 1e-9 * d.norm());
            }
        }
    }

    #[test]
    fn truncation_error_decays_geometrically() {
        let mut rng = Lcg(31);
        let p = random_panel(&mut rng, 3, 2);
        let reference = panel_expansion(&p, 80).unwrap();
        let z = reference.center + 2.0 * reference.radius * c(0.0, 1.0);
        let exact = eval_expansion(&reference, z).unwrap();
        let err = |order: usize| {
            let e = MultipoleExpansion { coeffs: reference.coeffs[..order].to_vec(), ..reference.clone() };
            (eval_expansion(&e, z).unwrap() - exact).norm()
        };
        for order in [5, 10, 15] {
            assert!(err(order) <= 2f64.powi(-(order as i32)) * 4.0 * exact.norm().max(1.0) * 10.0);
        }
        assert!(err(20) < err(10));
    }

    #[test]
    fn dispatcher_and_overlap() {
        let mut rng = Lcg(37);
        let p = random_panel(&mut rng, 5, 3);
        let ev = PanelEvaluator::new(p.clone(), DEFAULT_TOLERANCE).unwrap();
        let (ctr, r) = (ev.expansion.center, ev.expansion.radius);
        for k in 0..6 {
            let dir = Complex64::from_polar(1.0, 0.9 * k as f64);
            let z10 = ctr + 10.0 * r * dir;
            assert!(ev.is_far(z10));
            let v = ev.velocity(z10).unwrap();
            assert!((v - velocity_direct(&p, z10).unwrap()).norm() < 1e-10 * v.norm());
            assert!(!ev.is_far(ctr + r * dir));
            let zb = ctr + 1.8 * r * (1.0 + 1e-9) * dir;
            let far = eval_expansion(&ev.expansion, zb).unwrap();
            let near = velocity_direct(&p, zb).unwrap();
            assert!((far - near).norm() < 1e-8 * near.norm());
        }
        assert!((velocity(&p, ctr + 3.0 * r).unwrap() - velocity_direct(&p, ctr + 3.0 * r).unwrap()).norm() < 1e-11);
    }

    #[test]
    fn far_field_decay() {
        let mut rng = Lcg(41);
        let p = random_panel(&mut rng, 3, 3);
        let f1 = p.total_strength().norm() / (2.0 * PI);
        for r in [1e2, 1e3, 1e4] {
            let v = velocity_direct(&p, c(r, 0.3 * r)).unwrap();
            let zn = c(r, 0.3 * r).norm();
            assert!(v.norm() * zn <= f1 * (1.0 + 10.0 / r) + 1e-12);
        }
    }
}
