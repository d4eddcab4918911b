//! Analytic reference flows and error metrics.
//!
//! Two conformal maps of a circle in the `s`-plane are used: a mildly
//! deformed unit circle (non-lifting, source panels) and Karman-Trefftz
//! airfoils (lifting, vortex panels with the Kutta condition at the
//! trailing edge).

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::bem::{solve_boundary, BemConfig, Boundary, Component, Solution};
use crate::error::{Error, Result};
use crate::eval::{velocity_sum, PanelEvaluator, DEFAULT_TOLERANCE};
use crate::panel::{EndpointData, Panel};
use crate::quad::gauss_legendre;
use crate::series::Jet;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Shape derivatives carried by generated nodes: tangent, curvature and its
/// first arclength derivative (enough for septic panels).
const NODE_CURVATURE_TERMS: usize = 2;

/// Trailing-edge nodes with `x` above this get no curvature data (cubic at most).
pub const CUBIC_REDUCTION_X: f64 = 1.9;

const DEFORMATION: f64 = 0.1;
const DEFORMATION_POLE: Complex64 = Complex64 { re: 0.3, im: 0.4 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConformalMap {
    /// `z = s + 0.1 / (s + 0.3 + 0.4i)`
    DeformedCircle,
    /// `z = n (1 + r) / (1 - r)` with `r = ((s - 1)/(s + 1))^n`
    KarmanTrefftz { n: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Airfoil {
    A,
    B,
}

impl Airfoil {
    /// `(mu, n)`
    pub fn parameters(self) -> (Complex64, f64) {
        match self {
            Airfoil::A => (Complex64::new(-0.09, 0.09), 1.93),
            Airfoil::B => (Complex64::new(-0.06, 0.06), 1.95),
        }
    }
}

impl ConformalMap {
    pub fn eval(&self, s: Complex64) -> Complex64 {
        match *self {
            ConformalMap::DeformedCircle => s + DEFORMATION / (s + DEFORMATION_POLE),
            ConformalMap::KarmanTrefftz { n } => {
                let r = ((s - 1.0) / (s + 1.0)).powf(n);
                n * (1.0 + r) / (1.0 - r)
            }
        }
    }

    pub fn derivative(&self, s: Complex64) -> Complex64 {
        match *self {
            ConformalMap::DeformedCircle => 1.0 - DEFORMATION / ((s + DEFORMATION_POLE) * (s + DEFORMATION_POLE)),
            ConformalMap::KarmanTrefftz { n } => {
                let w = (s - 1.0) / (s + 1.0);
                let r = w.powf(n);
                // dz/dr * dr/dw * dw/ds
                2.0 * n / ((1.0 - r) * (1.0 - r)) * n * r / w * 2.0 / ((s + 1.0) * (s + 1.0))
            }
        }
    }

    pub fn eval_jet(&self, s: &Jet) -> Jet {
        match *self {
            ConformalMap::DeformedCircle => {
                s.add(&s.add_const(DEFORMATION_POLE).recip().scale(DEFORMATION.into()))
            }
            ConformalMap::KarmanTrefftz { n } => {
                let w = s.add_const(-ONE).div(&s.add_const(ONE));
                let r = w.powc(n.into());
                r.add_const(ONE).div(&r.scale(-ONE).add_const(ONE)).scale(n.into())
            }
        }
    }

    /// Preimage outside the circle `|s - center| = radius`.
    pub fn inverse(&self, z: Complex64, center: Complex64, radius: f64) -> Result<Complex64> {
        let candidates: Vec<Complex64> = match *self {
            ConformalMap::DeformedCircle => {
                // s^2 + (p - z) s + (0.1 - z p) = 0
                let b = DEFORMATION_POLE - z;
                let c = DEFORMATION - z * DEFORMATION_POLE;
                let disc = (b * b - 4.0 * c).sqrt();
                vec![(-b + disc) * 0.5, (-b - disc) * 0.5]
            }
            ConformalMap::KarmanTrefftz { n } => {
                let r = (z - n) / (z + n);
                (-1..=1)
                    .filter_map(|k| {
                        let arg = (r.arg() + 2.0 * PI * k as f64) / n;
                        if arg <= -PI || arg > PI {
                            return None;
                        }
                        let w = Complex64::from_polar(r.norm().powf(1.0 / n), arg);
                        Some((1.0 + w) / (1.0 - w))
                    })
                    .collect()
            }
        };
        let mut best = candidates
            .into_iter()
            .filter(|s| s.is_finite())
            .max_by(|a, b| (a - center).norm().partial_cmp(&(b - center).norm()).unwrap())
            .ok_or_else(|| Error::Geometry(format!("no preimage of {z}")))?;
        for _ in 0..4 {
            let step = (self.eval(best) - z) / self.derivative(best);
            best -= step;
            if step.norm() < 1e-15 * best.norm().max(1.0) {
                break;
            }
        }
        if (best - center).norm() < radius * (1.0 - 1e-9) || !best.is_finite() {
            return Err(Error::Geometry(format!("point {z} lies inside the body")));
        }
        Ok(best)
    }
}

/// Potential flow around a mapped circle of centre `center` and radius
/// `radius`, rotated rigidly by `rotation` radians in the physical plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceFlow {
    pub map: ConformalMap,
    pub center: Complex64,
    pub radius: f64,
    pub speed: f64,
    pub rotation: f64,
    /// Clockwise-positive circulation; zero for the deformed circle.
    pub circulation: f64,
}

impl ReferenceFlow {
    pub fn deformed_circle() -> Self {
        Self { map: ConformalMap::DeformedCircle, center: 0.0.into(), radius: 1.0, speed: 1.0, rotation: 0.0, circulation: 0.0 }
    }

    pub fn karman_trefftz(airfoil: Airfoil) -> Self {
        let (mu, n) = airfoil.parameters();
        let speed = 1.0;
        Self {
            map: ConformalMap::KarmanTrefftz { n },
            center: mu,
            radius: (1.0 - mu).norm(),
            speed,
            rotation: 0.0,
            circulation: 4.0 * PI * speed * mu.im,
        }
    }

    pub fn rotated(&self, angle: f64) -> Self {
        Self { rotation: self.rotation + angle, ..self.clone() }
    }

    fn turn(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.rotation)
    }

    /// Complex free-stream velocity `V_inf`.
    pub fn freestream(&self) -> Complex64 {
        self.speed * self.turn()
    }

    pub fn z(&self, s: Complex64) -> Complex64 {
        self.turn() * self.map.eval(s)
    }

    pub fn dz_ds(&self, s: Complex64) -> Complex64 {
        self.turn() * self.map.derivative(s)
    }

    pub fn s(&self, z: Complex64) -> Result<Complex64> {
        self.map.inverse(z / self.turn(), self.center, self.radius)
    }

    /// `conj V` at the image of `s`.
    pub fn conj_velocity_at_s(&self, s: Complex64) -> Complex64 {
        let d = s - self.center;
        let w = self.speed * (1.0 - self.radius * self.radius / (d * d)) + I * self.circulation / (2.0 * PI * d);
        w / self.dz_ds(s)
    }

    pub fn conj_velocity(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.conj_velocity_at_s(self.s(z)?))
    }

    /// Circle parameter of the trailing edge (`s = 1`).
    pub fn trailing_edge_phi(&self) -> f64 {
        (1.0 - self.center).arg()
    }

    fn s_of_phi(&self, phi: f64) -> Complex64 {
        self.center + Complex64::from_polar(self.radius, phi)
    }

    /// `z(phi)` jet of the given order about `phi`.
    fn curve_jet(&self, phi: f64, order: usize) -> Jet {
        let s = Jet::variable(phi.into(), order).scale(I).exp().scale(self.radius.into()).add_const(self.center);
        self.map.eval_jet(&s).scale(self.turn())
    }

    /// Node data at circle parameter `phi` with `curvature_terms` curvature entries.
    fn node(&self, phi: f64, curvature_terms: usize) -> EndpointData {
        let order = curvature_terms + 2;
        let z = self.curve_jet(phi, order);
        let dz = z.derivative();
        let speed = dz.mul(&dz.conj()).sqrt();
        let theta = dz.ln().im();
        let mut curv = Vec::with_capacity(curvature_terms);
        let mut f = theta.derivative().div(&speed.truncate(order - 2));
        for _ in 0..curvature_terms {
            curv.push(f.value().re);
            let len = f.order();
            f = f.derivative().div(&speed.truncate(len.saturating_sub(1)));
        }
        EndpointData::geometric(z.value(), theta.value().re, curv)
    }
}

/// Boundary, solver settings and reference flow for one benchmark run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchCase {
    pub boundary: Boundary,
    pub config: BemConfig,
    pub reference: ReferenceFlow,
    /// Circle parameters of the nodes.
    pub node_phi: Vec<f64>,
}

impl BenchCase {
    pub fn solve(&self) -> Result<Solution> {
        solve_boundary(&self.boundary, &self.config)
    }
}

pub fn deformed_circle_case(n_panels: usize, shape_order: usize, strength_order: usize) -> Result<BenchCase> {
    if n_panels < 8 {
        return Err(Error::InvalidInput(format!("deformed circle needs at least 8 panels, got {n_panels}")));
    }
    let reference = ReferenceFlow::deformed_circle();
    let node_phi: Vec<f64> = (0..n_panels).map(|k| 2.0 * PI * k as f64 / n_panels as f64).collect();
    let nodes = node_phi.iter().map(|&p| reference.node(p, NODE_CURVATURE_TERMS)).collect();
    let mut config = BemConfig::new(shape_order, strength_order);
    config.freestream = reference.freestream();
    config.components = vec![Component::Source];
    config.total_source_zero = true;
    Ok(BenchCase { boundary: Boundary { nodes, closed: true }, config, reference, node_phi })
}

pub fn karman_trefftz_case(airfoil: Airfoil, n_panels: usize, shape_order: usize, strength_order: usize) -> Result<BenchCase> {
    karman_trefftz_case_with(ReferenceFlow::karman_trefftz(airfoil), n_panels, shape_order, strength_order)
}

/// Airfoil case for an explicit (possibly rotated) reference flow.
pub fn karman_trefftz_case_with(
    reference: ReferenceFlow,
    n_panels: usize,
    shape_order: usize,
    strength_order: usize,
) -> Result<BenchCase> {
    let ConformalMap::KarmanTrefftz { n } = reference.map else {
        return Err(Error::InvalidInput("not a Karman-Trefftz reference flow".into()));
    };
    if n_panels < 16 {
        return Err(Error::InvalidInput(format!("airfoil needs at least 16 panels, got {n_panels}")));
    }
    let phi_te = reference.trailing_edge_phi();
    let node_phi: Vec<f64> = (0..=n_panels).map(|k| phi_te + 2.0 * PI * k as f64 / n_panels as f64).collect();
    let turn = reference.turn();
    let z_te = turn * n;
    let mut nodes = Vec::with_capacity(n_panels + 1);
    for (k, &phi) in node_phi.iter().enumerate() {
        if k == 0 || k == n_panels {
            // z - n ~ 2n ((s - 1)/2)^n, and s - 1 leaves along +-i e^{i phi_te}
            let angle = if k == 0 {
                n * (phi_te + PI / 2.0)
            } else {
                n * (phi_te - PI / 2.0) + PI
            };
            nodes.push(EndpointData::geometric(z_te, angle + reference.rotation, vec![]));
            continue;
        }
        let mut node = reference.node(phi, NODE_CURVATURE_TERMS);
        if (node.position / turn).re > CUBIC_REDUCTION_X {
            node.curvature.clear();
        }
        nodes.push(node);
    }
    let mut config = BemConfig::new(shape_order, strength_order);
    config.freestream = reference.freestream();
    config.components = vec![Component::Vortex];
    config.kutta_nodes = vec![0, n_panels];
    Ok(BenchCase { boundary: Boundary { nodes, closed: false }, config, reference, node_phi })
}

/// One stretch of the error contour.
#[derive(Debug, Clone, Copy)]
enum Segment {
    /// Offset of the body between two circle parameters.
    Side { phi_a: f64, phi_b: f64 },
    /// Arc of radius `offset` about the trailing edge.
    Arc { center: Complex64, psi_a: f64, psi_b: f64 },
}

/// Contour point, arclength weight per unit parameter, and `s` preimage.
fn segment_point(r: &ReferenceFlow, seg: Segment, u: f64, offset: f64) -> Result<(Complex64, f64, Complex64)> {
    match seg {
        Segment::Side { phi_a, phi_b } => {
            let phi = phi_a + u * (phi_b - phi_a);
            let z = r.curve_jet(phi, 2).derivatives();
            let speed = z[1].norm();
            let kappa = (z[1].conj() * z[2]).im / speed.powi(3);
            let normal = -I * z[1] / speed;
            let p = z[0] + offset * normal;
            let weight = speed * (1.0 + offset * kappa).abs() * (phi_b - phi_a);
            Ok((p, weight, r.s(p)?))
        }
        Segment::Arc { center, psi_a, psi_b } => {
            let psi = psi_a + u * (psi_b - psi_a);
            let p = center + Complex64::from_polar(offset, psi);
            Ok((p, offset * (psi_b - psi_a), r.s(p)?))
        }
    }
}

fn contour_segments(r: &ReferenceFlow, node_phi: &[f64], offset: f64) -> Vec<Segment> {
    let mut segs: Vec<Segment> = node_phi.windows(2).map(|w| Segment::Side { phi_a: w[0], phi_b: w[1] }).collect();
    match r.map {
        ConformalMap::DeformedCircle => {
            let last = *node_phi.last().unwrap();
            segs.push(Segment::Side { phi_a: last, phi_b: node_phi[0] + 2.0 * PI });
        }
        ConformalMap::KarmanTrefftz { n } => {
            let phi_te = r.trailing_edge_phi();
            let up = n * (phi_te + PI / 2.0) + r.rotation - PI / 2.0;
            let low = n * (phi_te - PI / 2.0) + PI + r.rotation - PI / 2.0;
            let span = (up - low).rem_euclid(2.0 * PI);
            let center = r.z(1.0.into());
            let pieces = 4;
            for k in 0..pieces {
                let a = low + span * k as f64 / pieces as f64;
                segs.push(Segment::Arc { center, psi_a: a, psi_b: a + span / pieces as f64 });
            }
            let _ = offset;
        }
    }
    segs
}

/// `(sqrt(int |V_ref - V|^2 ds), L)` with each segment split into `2^level` Gauss pieces.
fn contour_integral<F>(r: &ReferenceFlow, segs: &[Segment], offset: f64, level: u32, field: &F) -> Result<(f64, f64)>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    let (x, w) = gauss_legendre(16);
    let pieces = 1usize << level;
    let parts: Vec<(f64, f64)> = segs
        .par_iter()
        .map(|&seg| -> Result<(f64, f64)> {
            let (mut err, mut len) = (0.0, 0.0);
            for p in 0..pieces {
                let (a, b) = (p as f64 / pieces as f64, (p + 1) as f64 / pieces as f64);
                for (xi, wi) in x.iter().zip(&w) {
                    let u = a + 0.5 * (b - a) * (1.0 + xi);
                    let (z, weight, s) = segment_point(r, seg, u, offset)?;
                    let dw = wi * 0.5 * (b - a) * weight;
                    let v_ref = r.conj_velocity_at_s(s);
                    err += dw * (field(z)? - v_ref).norm_sqr();
                    len += dw;
                }
            }
            Ok((err, len))
        })
        .collect::<Result<_>>()?;
    let (err, len) = parts.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok((err.sqrt(), len))
}

/// Error of an arbitrary `conj V` field on the contour at `distance` (body surface = 1).
pub fn field_error<F>(reference: &ReferenceFlow, node_phi: &[f64], distance: f64, field: F) -> Result<f64>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    if !(distance > 1.0) {
        return Err(Error::InvalidInput(format!("distance must exceed 1 (the surface), got {distance}")));
    }
    let offset = distance - 1.0;
    let segs = contour_segments(reference, node_phi, offset);
    let mut prev: Option<f64> = None;
    for level in 0..8 {
        let (root, len) = contour_integral(reference, &segs, offset, level, &field)?;
        let e = root / (len.sqrt() * reference.speed);
        if let Some(p) = prev {
            if (e - p).abs() <= 1e-3 * e.abs().max(1e-300) || e == p {
                return Ok(e);
            }
        }
        prev = Some(e);
    }
    Ok(prev.unwrap())
}

/// `E = sqrt(int |V_ref - V|^2 ds) / (sqrt(L) V_inf)` for solved panels.
pub fn velocity_error(case: &BenchCase, panels: &[Panel], distance: f64) -> Result<f64> {
    let evs: Vec<PanelEvaluator> =
        panels.iter().map(|p| PanelEvaluator::new(p.clone(), DEFAULT_TOLERANCE)).collect::<Result<_>>()?;
    let v_inf = case.reference.freestream().conj();
    field_error(&case.reference, &case.node_phi, distance, |z| {
        velocity_sum(&evs, z).map(|v| v + v_inf).map_err(|e| match e {
            Error::NearSingularity { .. } => Error::Geometry(format!("error contour meets the panels near {z}")),
            other => other,
        })
    })
}

/// `(arclength, |V_ref - V| / V_inf)` at `samples` points offset by
/// `offset` along the outward normal, parameter range starting at `node_phi[0]`.
pub fn surface_error_profile(case: &BenchCase, panels: &[Panel], offset: f64, samples: usize) -> Result<Vec<(f64, f64)>> {
    let evs: Vec<PanelEvaluator> =
        panels.iter().map(|p| PanelEvaluator::new(p.clone(), DEFAULT_TOLERANCE)).collect::<Result<_>>()?;
    let r = &case.reference;
    let v_inf = r.freestream().conj();
    let phi0 = case.node_phi.first().copied().unwrap_or(0.0);
    let step = 2.0 * PI / samples as f64;
    let mut out = Vec::with_capacity(samples);
    let mut arc = 0.0;
    let mut prev: Option<Complex64> = None;
    for k in 0..samples {
        let phi = phi0 + (k as f64 + 0.5) * step;
        let s = r.s_of_phi(phi);
        let zs = r.z(s);
        let tangent = r.dz_ds(s) * I * (s - r.center);
        let z = zs - I * tangent / tangent.norm() * offset;
        if let Some(p) = prev {
            arc += (zs - p).norm();
        }
        prev = Some(zs);
        let v = velocity_sum(&evs, z)? + v_inf;
        let err = (r.conj_velocity(z)? - v).norm() / r.speed;
        out.push((arc, err));
    }
    Ok(out)
}

/// Signed relative circulation error `(Gamma - Gamma_ref) / Gamma_ref`.
pub fn circulation_error(panels: &[Panel], reference: &ReferenceFlow) -> Result<f64> {
    if reference.circulation == 0.0 {
        return Err(Error::InvalidInput("circulation error is undefined for a zero reference circulation".into()));
    }
    Ok((crate::bem::circulation(panels) - reference.circulation) / reference.circulation)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderFit {
    pub order: f64,
    /// Errors decrease strictly with the panel count.
    pub monotone: bool,
    /// At least four samples spanning a factor four in panel count.
    pub adequate: bool,
}

/// Negated least-squares slope of `ln E` against `ln n`.
pub fn convergence_order(samples: &[(usize, f64)]) -> Result<OrderFit> {
    if samples.len() < 2 {
        return Err(Error::InvalidInput("need at least two samples".into()));
    }
    if samples.iter().any(|&(n, e)| n == 0 || !(e > 0.0) || !e.is_finite()) {
        return Err(Error::InvalidInput("samples need positive panel counts and errors".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by_key(|s| s.0);
    let pts: Vec<(f64, f64)> = sorted.iter().map(|&(n, e)| ((n as f64).ln(), e.ln())).collect();
    let m = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0 / m, a.1 + p.1 / m));
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("samples need distinct panel counts".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let monotone = sorted.windows(2).all(|w| w[1].1 < w[0].1);
    let range = sorted.last().unwrap().0 as f64 / sorted[0].0 as f64;
    Ok(OrderFit { order: -sxy / sxx, monotone, adequate: sorted.len() >= 4 && range >= 4.0 })
}

/// Samples before the round-off plateau: the plateau starts at the first
/// sample below `floor` whose log-improvement is less than half the
/// previous step's.
pub fn pre_plateau(samples: &[(usize, f64)], floor: f64) -> Vec<(usize, f64)> {
    let mut sorted = samples.to_vec();
    sorted.sort_by_key(|s| s.0);
    let mut out: Vec<(usize, f64)> = Vec::new();
    for s in sorted {
        if out.len() >= 2 && s.1 < floor {
            let k = out.len();
            let prev = (out[k - 2].1 / out[k - 1].1).ln();
            let step = (out[k - 1].1 / s.1).ln();
            if step < 0.5 * prev {
                break;
            }
        }
        out.push(s);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_constants_and_far_field() {
        let r = ReferenceFlow::deformed_circle();
        let s = Complex64::new(2.0, 1.0);
        assert!((r.z(s) - (s + 0.1 / (s + Complex64::new(0.3, 0.4)))).norm() < 1e-15);
        let far = r.conj_velocity_at_s(Complex64::new(1e7, 0.0));
        assert!((far - 1.0).norm() < 1e-12);
    }

    #[test]
    fn airfoil_parameters() {
        let a = ReferenceFlow::karman_trefftz(Airfoil::A);
        assert!((a.circulation - 4.0 * PI * 0.09).abs() < 1e-15);
        assert!((a.radius - Complex64::new(1.09, -0.09).norm()).abs() < 1e-15);
        let (mu, n) = Airfoil::B.parameters();
        assert_eq!((mu, n), (Complex64::new(-0.06, 0.06), 1.95));
        // Kutta: the surface velocity is finite at the trailing edge
        let te = a.s_of_phi(a.trailing_edge_phi() + 1e-6);
        assert!(a.conj_velocity_at_s(te).norm() < 10.0);
    }

    #[test]
    fn map_jets_match_derivative() {
        for r in [ReferenceFlow::deformed_circle(), ReferenceFlow::karman_trefftz(Airfoil::A)] {
            for phi in [0.3, 1.7, 3.0, 4.4] {
                let s = r.s_of_phi(phi);
                let jet = r.curve_jet(phi, 1).derivatives();
                assert!((jet[0] - r.z(s)).norm() < 1e-13);
                let ds = I * (s - r.center);
                assert!((jet[1] - r.dz_ds(s) * ds).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn reference_flow_is_potential_derivative() {
        // central difference of the complex potential W(s) along z
        let r = ReferenceFlow::karman_trefftz(Airfoil::B);
        let pot = |s: Complex64| {
            let d = s - r.center;
            r.speed * (d + r.radius * r.radius / d) + I * r.circulation / (2.0 * PI) * d.ln()
        };
        for phi in [0.5, 2.0, 4.0] {
            let s = r.center + Complex64::from_polar(1.4 * r.radius, phi);
            let h = 1e-5;
            let dw = (pot(s + h) - pot(s - h)) / (2.0 * h);
            let dz = (r.z(s + h) - r.z(s - h)) / (2.0 * h);
            assert!((dw / dz - r.conj_velocity_at_s(s)).norm() < 1e-8);
        }
    }

    #[test]
    fn circulation_of_reference_flow() {
        let r = ReferenceFlow::karman_trefftz(Airfoil::A);
        let (x, w) = gauss_legendre(32);
        let mut total = Complex64::new(0.0, 0.0);
        for (xi, wi) in x.iter().zip(&w) {
            let phi = PI * (1.0 + xi);
            let s = r.center + Complex64::from_polar(1.5, phi);
            total += wi * PI * r.conj_velocity_at_s(s) * r.dz_ds(s) * I * (s - r.center);
        }
        // counter-clockwise loop integral of conj V dz = -Gamma (clockwise positive)
        assert!((-total.re - r.circulation).abs() < 1e-12);
    }

    #[test]
    fn inverse_round_trip() {
        for r in [
            ReferenceFlow::deformed_circle(),
            ReferenceFlow::karman_trefftz(Airfoil::A).rotated(0.4),
        ] {
            for k in 0..40 {
                let phi = r.trailing_edge_phi() + 2.0 * PI * (k as f64 + 0.5) / 40.0;
                let s = r.center + Complex64::from_polar(r.radius * 1.01, phi);
                let back = r.s(r.z(s)).unwrap();
                assert!((back - s).norm() < 1e-10, "{s} {back}");
            }
        }
    }

    #[test]
    fn nodes_close_on_trailing_edge() {
        let case = karman_trefftz_case(Airfoil::A, 50, 5, 3).unwrap();
        let nodes = &case.boundary.nodes;
        assert_eq!(nodes.len(), 51);
        assert_eq!(nodes[0].position, nodes[50].position);
        assert!((nodes[0].position - 1.93).norm() < 1e-15);
        assert_eq!(case.config.kutta_nodes, vec![0, 50]);
        assert!(nodes.iter().filter(|n| n.position.re > CUBIC_REDUCTION_X).all(|n| n.curvature.is_empty()));
        // tangents agree with chords near the trailing edge
        let chord = nodes[1].position - nodes[0].position;
        assert!((chord.arg() - nodes[0].tangent_angle).abs() < 0.2);
    }

    #[test]
    fn node_curvature_matches_circle() {
        let r = ReferenceFlow { map: ConformalMap::DeformedCircle, ..ReferenceFlow::deformed_circle() };
        let node = r.node(0.7, 2);
        // curvature of the mapped circle by finite differences of the tangent angle
        let h = 1e-5;
        let t = |p: f64| r.node(p, 0).tangent_angle;
        let ds = r.curve_jet(0.7, 1).derivatives()[1].norm();
        let kappa = (t(0.7 + h) - t(0.7 - h)) / (2.0 * h) / ds;
        assert!((node.curvature[0] - kappa).abs() < 1e-7);
    }

    #[test]
    fn deformed_curve_is_simple() {
        let case = deformed_circle_case(50, 3, 1).unwrap();
        let pts: Vec<Complex64> = case.boundary.nodes.iter().map(|n| n.position).collect();
        let n = pts.len();
        let cross = |a: Complex64, b: Complex64, c: Complex64, d: Complex64| {
            let o = |p: Complex64, q: Complex64, r: Complex64| ((q - p).conj() * (r - p)).im;
            o(a, b, c) * o(a, b, d) < 0.0 && o(c, d, a) * o(c, d, b) < 0.0
        };
        for i in 0..n {
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                assert!(!cross(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n]));
            }
        }
    }

    #[test]
    fn error_metric_trivial_cases() {
        let case = deformed_circle_case(16, 1, 1).unwrap();
        let r = &case.reference;
        let e = field_error(r, &case.node_phi, 1.2, |z| r.conj_velocity(z)).unwrap();
        assert!(e < 1e-14);
        let delta = Complex64::new(0.03, -0.04);
        let e = field_error(r, &case.node_phi, 1.2, |z| Ok(r.conj_velocity(z)? + delta)).unwrap();
        assert!((e - 0.05).abs() < 1e-12);
        assert!(field_error(r, &case.node_phi, 1.0, |_| Ok(delta)).is_err());
    }

    #[test]
    fn circulation_error_examples() {
        let r = ReferenceFlow::karman_trefftz(Airfoil::A);
        let p = |g: f64| Panel::new(0.0.into(), 0.0, 1.0, vec![0.0], vec![I * g]).unwrap();
        assert!(circulation_error(&[p(r.circulation)], &r).unwrap().abs() < 1e-15);
        assert!((circulation_error(&[p(2.0 * r.circulation)], &r).unwrap() - 1.0).abs() < 1e-15);
        assert!(circulation_error(&[p(1.0)], &ReferenceFlow::deformed_circle()).is_err());
    }

    #[test]
    fn order_fits() {
        let s: Vec<(usize, f64)> = [25, 50, 100, 200].iter().map(|&n| (n, (n as f64).powi(-2))).collect();
        let f = convergence_order(&s).unwrap();
        assert!((f.order - 2.0).abs() < 1e-12 && f.monotone && f.adequate);
        let flat: Vec<(usize, f64)> = [25, 50, 100, 200].iter().map(|&n| (n, 0.3)).collect();
        let f = convergence_order(&flat).unwrap();
        assert!(f.order.abs() < 1e-12 && !f.monotone);
        let plateau = [(25, 1.7e-7), (50, 4.6e-10), (100, 1.6e-12), (200, 3.5e-13)];
        assert_eq!(pre_plateau(&plateau, 1e-10).len(), 3);
        assert_eq!(pre_plateau(&plateau, 1e-14).len(), 4);
        let slow_start = [(25, 1e-2), (50, 1e-5), (100, 2e-6), (200, 4e-7)];
        assert_eq!(pre_plateau(&slow_start, 1e-10).len(), 4);
    }

    #[test]
    fn circle_error_drops_with_shape_order() {
        let e = |m, n| {
            let case = deformed_circle_case(50, m, n).unwrap();
            let sol = case.solve().unwrap();
            velocity_error(&case, &sol.panels, 1.2).unwrap()
        };
        let (e11, e31) = (e(1, 1), e(3, 1));
        assert!(e31 * 3.0 < e11, "{e11} {e31}");
    }
}
