//! Boundary-condition system for closed bodies.
//!
//! Unknowns are the tangential strength and its arclength derivatives at the
//! boundary nodes, shared by the two panels meeting there. Every panel is
//! split into `u + 1` evaluation sub-panels (`u` unknowns per node) and the
//! resulting overdetermined system is solved in the least-squares sense.
//! A second, heavily weighted set of rows on a `u`-way split pins the fit
//! close to collocation, which keeps the far field accurate while the
//! extra rows remove the near-singular modes of the square system.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{PanelEvaluator, DEFAULT_TOLERANCE};
use crate::flux::PanelFlux;
use crate::panel::{build_panel, strength_from_endpoint_data, EndpointData, Panel, DEFAULT_SLOPE_MAX};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Offset of control points from the curve, relative to the sub-panel length.
const CONTROL_OFFSET: f64 = 1e-10;

/// Ordered boundary nodes. With `closed`, the last node connects back to the
/// first; otherwise the first and last nodes must coincide in position (a
/// body with a corner there, such as a sharp trailing edge).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Boundary {
    pub nodes: Vec<EndpointData>,
    pub closed: bool,
}

impl Boundary {
    pub fn panel_count(&self) -> usize {
        if self.closed {
            self.nodes.len()
        } else {
            self.nodes.len().saturating_sub(1)
        }
    }

    pub fn panel_nodes(&self, panel: usize) -> (usize, usize) {
        (panel, (panel + 1) % self.nodes.len())
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes.len() < 3 {
            return Err(Error::InvalidInput("a boundary needs at least three nodes".into()));
        }
        if !self.closed {
            let a = self.nodes[0].position;
            let b = self.nodes[self.nodes.len() - 1].position;
            let scale = self.nodes.iter().map(|n| n.position.norm()).fold(1.0, f64::max);
            if (a - b).norm() > 1e-12 * scale {
                return Err(Error::InvalidInput("open boundary: first and last nodes must coincide".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    Source,
    Vortex,
}

impl Component {
    fn factor(self) -> Complex64 {
        match self {
            Component::Source => Complex64::new(1.0, 0.0),
            Component::Vortex => I,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BcMode {
    /// Zero net flow through every evaluation sub-panel.
    Flux,
    /// Zero normal velocity at every sub-panel midpoint.
    ControlPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BemConfig {
    pub shape_order: usize,
    pub strength_order: usize,
    pub mode: BcMode,
    pub freestream: Complex64,
    pub components: Vec<Component>,
    pub total_source_zero: bool,
    /// Nodes whose strength value is fixed to zero.
    pub kutta_nodes: Vec<usize>,
    pub slope_max: f64,
    /// Constraint row weight relative to the median row norm.
    pub constraint_weight: f64,
    /// Scale each normalized row by its sub-panel length relative to the mean.
    pub arclength_weighting: bool,
    /// Evaluation sub-panels per panel beyond the unknowns per node.
    pub extra_conditions: usize,
    /// Weight of the rows on the `u`-way split (0 disables them). Only used
    /// with two or more unknowns per node.
    pub collocation_weight: f64,
}

impl BemConfig {
    pub fn new(shape_order: usize, strength_order: usize) -> Self {
        Self {
            shape_order,
            strength_order,
            mode: BcMode::Flux,
            freestream: Complex64::new(1.0, 0.0),
            components: vec![Component::Source],
            total_source_zero: false,
            kutta_nodes: vec![],
            slope_max: DEFAULT_SLOPE_MAX,
            constraint_weight: 1e3,
            arclength_weighting: false,
            extra_conditions: 1,
            collocation_weight: 1e3,
        }
    }

    pub fn unknowns_per_node(&self) -> usize {
        self.strength_order.div_ceil(2).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, m) in [("shape", self.shape_order), ("strength", self.strength_order)] {
            if m % 2 == 0 || m > 7 {
                return Err(Error::InvalidInput(format!("{name} order must be 1, 3, 5 or 7, got {m}")));
            }
        }
        if self.components.is_empty() {
            return Err(Error::InvalidInput("at least one strength component is required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Unknown {
    pub node: usize,
    /// Arclength derivative order of the tangential strength.
    pub order: usize,
    pub component: Component,
}

#[derive(Debug, Clone)]
pub struct BemSystem {
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
    pub unknown_map: Vec<Unknown>,
    pub row_weights: Vec<f64>,
    pub panels: Vec<Panel>,
    pub panel_nodes: Vec<(usize, usize)>,
    pub node_count: usize,
    pub unknowns_per_node: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Solution {
    pub panels: Vec<Panel>,
    /// Tangential strength and arclength derivatives per node.
    pub node_values: Vec<Vec<Complex64>>,
    pub residual: Vec<f64>,
    pub residual_norm: f64,
    pub circulation: f64,
}

/// Panel shape order given what both end points can support.
pub fn panel_shape_order(a: &EndpointData, b: &EndpointData, requested: usize) -> usize {
    let d = (requested - 1) / 2;
    let avail = a.shape_derivative_count().min(b.shape_derivative_count());
    2 * d.min(avail) + 1
}

/// Panel shapes (zero strength) along the boundary.
pub fn build_panels(boundary: &Boundary, shape_order: usize, slope_max: f64) -> Result<Vec<Panel>> {
    boundary.validate()?;
    (0..boundary.panel_count())
        .map(|p| {
            let (a, b) = boundary.panel_nodes(p);
            let (na, nb) = (strip(&boundary.nodes[a]), strip(&boundary.nodes[b]));
            build_panel(&na, &nb, panel_shape_order(&na, &nb, shape_order), slope_max)
        })
        .collect()
}

fn strip(n: &EndpointData) -> EndpointData {
    EndpointData::geometric(n.position, n.tangent_angle, n.curvature.clone())
}

/// Net flow of a uniform stream through the segment `z1 -> z2`.
pub fn freestream_flux(freestream: Complex64, z1: Complex64, z2: Complex64) -> f64 {
    (freestream.conj() * (z2 - z1)).im
}

/// Strength coefficients of `panel` for unit nodal data `(end, order)`.
fn panel_basis(panel: &Panel, u: usize) -> Result<Vec<Vec<Complex64>>> {
    let mut out = Vec::with_capacity(2 * u);
    for local in 0..2 * u {
        let mut a = vec![Complex64::new(0.0, 0.0); u];
        let mut b = a.clone();
        if local < u {
            a[local] = Complex64::new(1.0, 0.0);
        } else {
            b[local - u] = Complex64::new(1.0, 0.0);
        }
        out.push(strength_from_endpoint_data(panel, &a, &b)?);
    }
    Ok(out)
}

fn outward_normal(panel: &Panel, zeta: f64) -> Complex64 {
    let t = panel.rotation() * Complex64::new(1.0, panel.eta_derivative(zeta));
    -I * t / t.norm()
}

/// Arclength of a panel by Gauss-Legendre quadrature.
pub fn arclength(panel: &Panel) -> f64 {
    let (x, w) = crate::quad::gauss_legendre(16);
    let h = 0.5 * panel.length;
    x.iter()
        .zip(&w)
        .map(|(xi, wi)| {
            let s = panel.eta_derivative(h * (1.0 + xi));
            wi * h * (1.0 + s * s).sqrt()
        })
        .sum()
}

pub fn assemble(boundary: &Boundary, config: &BemConfig) -> Result<BemSystem> {
    config.validate()?;
    let panels = build_panels(boundary, config.shape_order, config.slope_max)?;
    let u = config.unknowns_per_node();
    let n_nodes = boundary.nodes.len();
    let panel_nodes: Vec<(usize, usize)> = (0..panels.len()).map(|p| boundary.panel_nodes(p)).collect();

    for &k in &config.kutta_nodes {
        if k >= n_nodes {
            return Err(Error::InvalidInput(format!("Kutta node {k} out of range")));
        }
    }
    let mut unknown_map = Vec::new();
    let mut col_of = vec![vec![vec![None; config.components.len()]; u]; n_nodes];
    for (node, per_node) in col_of.iter_mut().enumerate() {
        for (order, per_order) in per_node.iter_mut().enumerate() {
            for (ci, &component) in config.components.iter().enumerate() {
                if order == 0 && config.kutta_nodes.contains(&node) {
                    continue;
                }
                per_order[ci] = Some(unknown_map.len());
                unknown_map.push(Unknown { node, order, component });
            }
        }
    }
    let cols = unknown_map.len();

    let basis: Vec<Vec<Vec<Complex64>>> = panels.iter().map(|p| panel_basis(p, u)).collect::<Result<_>>()?;
    let mut targets: Vec<Panel> = panels.iter().flat_map(|p| p.split_uniform(u + config.extra_conditions)).collect();
    let fitted = targets.len();
    // with one unknown per node the u-way split is the whole panel, whose
    // net-flux rows carry an alternating near-null mode; skip them there
    if config.collocation_weight > 0.0 && config.extra_conditions > 0 && u >= 2 {
        targets.extend(panels.iter().flat_map(|p| p.split_uniform(u)));
    }
    let rows = targets.len() + usize::from(config.total_source_zero);
    if rows < cols {
        return Err(Error::InvalidInput(format!("{rows} conditions for {cols} unknowns")));
    }

    let column = |p: usize, local: usize, ci: usize| -> Option<usize> {
        let (a, b) = panel_nodes[p];
        let node = if local < u { a } else { b };
        col_of[node][local % u][ci]
    };

    let evaluators: Vec<Vec<PanelEvaluator>> = if config.mode == BcMode::ControlPoint {
        panels
            .iter()
            .zip(&basis)
            .map(|(p, bs)| {
                bs.iter()
                    .map(|b| PanelEvaluator::new(p.with_strength(b.clone()), DEFAULT_TOLERANCE))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?
    } else {
        vec![]
    };

    let assembled: Vec<(Vec<f64>, f64)> = targets
        .par_iter()
        .map(|target| -> Result<(Vec<f64>, f64)> {
            let mut row = vec![0.0; cols];
            let rhs;
            match config.mode {
                BcMode::Flux => {
                    for (p, source) in panels.iter().enumerate() {
                        let kernel = PanelFlux::new(source, target)?;
                        for (local, b) in basis[p].iter().enumerate() {
                            let g = kernel.apply(b);
                            for (ci, comp) in config.components.iter().enumerate() {
                                if let Some(c) = column(p, local, ci) {
                                    row[c] += (g * comp.factor()).im;
                                }
                            }
                        }
                    }
                    rhs = -freestream_flux(config.freestream, target.start_point(), target.end_point());
                }
                BcMode::ControlPoint => {
                    let zeta = 0.5 * target.length;
                    let n = outward_normal(target, zeta);
                    let z = target.point(zeta) + n * (CONTROL_OFFSET * target.length);
                    for (p, evs) in evaluators.iter().enumerate() {
                        for (local, ev) in evs.iter().enumerate() {
                            let v = ev.velocity(z)?;
                            for (ci, comp) in config.components.iter().enumerate() {
                                if let Some(c) = column(p, local, ci) {
                                    row[c] += (v * comp.factor() * n).re;
                                }
                            }
                        }
                    }
                    rhs = -(config.freestream.conj() * n).re;
                }
            }
            Ok((row, rhs))
        })
        .collect::<Result<_>>()?;

    let mean_len = targets.iter().map(arclength).sum::<f64>() / targets.len() as f64;
    let mut matrix = DMatrix::zeros(rows, cols);
    let mut rhs = DVector::zeros(rows);
    let mut row_weights = Vec::with_capacity(rows);
    for (r, (row, b)) in assembled.into_iter().enumerate() {
        let m = row.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if m == 0.0 {
            return Err(Error::SingularSystem(format!("condition row {r} is identically zero")));
        }
        let mut w = if r < fitted { 1.0 } else { config.collocation_weight } / m;
        if config.arclength_weighting {
            w *= arclength(&targets[r]) / mean_len;
        }
        for (c, v) in row.iter().enumerate() {
            matrix[(r, c)] = v * w;
        }
        rhs[r] = b * w;
        row_weights.push(w);
    }

    if config.total_source_zero {
        let r = rows - 1;
        let mut row = vec![0.0; cols];
        if let Some(ci) = config.components.iter().position(|&c| c == Component::Source) {
            for (p, panel) in panels.iter().enumerate() {
                for (local, b) in basis[p].iter().enumerate() {
                    if let Some(c) = column(p, local, ci) {
                        row[c] += panel.with_strength(b.clone()).total_strength().re;
                    }
                }
            }
        }
        let m = row.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if m == 0.0 {
            return Err(Error::InvalidInput("total source constraint without source unknowns".into()));
        }
        let mut norms: Vec<f64> = (0..fitted).map(|i| matrix.row(i).amax()).collect();
        norms.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let w = config.constraint_weight * norms[norms.len() / 2] / m;
        for (c, v) in row.iter().enumerate() {
            matrix[(r, c)] = v * w;
        }
        row_weights.push(w);
    }

    for c in 0..cols {
        if matrix.column(c).amax() == 0.0 {
            return Err(Error::SingularSystem(format!("unknown {:?} is not touched by any condition", unknown_map[c])));
        }
    }

    Ok(BemSystem { matrix, rhs, unknown_map, row_weights, panels, panel_nodes, node_count: n_nodes, unknowns_per_node: u })
}

/// Least-squares solution by Householder QR; returns `(x, A x - b)`.
pub fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
    let (m, n) = a.shape();
    if m < n || n == 0 {
        return Err(Error::InvalidInput(format!("least squares needs rows >= cols > 0, got {m}x{n}")));
    }
    let scale: Vec<f64> = (0..n).map(|c| a.column(c).amax()).collect();
    if let Some(c) = scale.iter().position(|&s| s == 0.0) {
        return Err(Error::SingularSystem(format!("column {c} is zero")));
    }
    let mut scaled = a.clone();
    for (c, s) in scale.iter().enumerate() {
        scaled.column_mut(c).unscale_mut(*s);
    }
    let qr = scaled.qr();
    let r = qr.r();
    let dmax = (0..n).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    let (imin, dmin) = (0..n).map(|i| (i, r[(i, i)].abs())).fold((0, f64::INFINITY), |m, x| if x.1 < m.1 { x } else { m });
    if !(dmin > 1e-14 * dmax) {
        return Err(Error::SingularSystem(format!(
            "least-squares matrix is numerically rank deficient near column {imin} (|R_ii| ratio {:.1e}); reduce the panel orders or change the row weights",
            dmin / dmax
        )));
    }
    let mut qtb = b.clone();
    qr.q_tr_mul(&mut qtb);
    let y = r
        .solve_upper_triangular(&qtb.rows(0, n).into_owned())
        .ok_or_else(|| Error::SingularSystem("triangular solve failed".into()))?;
    let x = DVector::from_iterator(n, y.iter().zip(&scale).map(|(v, s)| v / s));
    let res = a * &x - b;
    Ok((x, res))
}

pub fn solve(sys: &BemSystem) -> Result<Solution> {
    let (x, res) = least_squares(&sys.matrix, &sys.rhs)?;
    let u = sys.unknowns_per_node;
    let mut node_values = vec![vec![Complex64::new(0.0, 0.0); u]; sys.node_count];
    for (k, unk) in sys.unknown_map.iter().enumerate() {
        node_values[unk.node][unk.order] += unk.component.factor() * x[k];
    }
    let panels: Vec<Panel> = sys
        .panels
        .iter()
        .zip(&sys.panel_nodes)
        .map(|(p, &(a, b))| Ok(p.with_strength(strength_from_endpoint_data(p, &node_values[a], &node_values[b])?)))
        .collect::<Result<_>>()?;
    let circulation = circulation(&panels);
    Ok(Solution {
        panels,
        node_values,
        residual_norm: res.norm(),
        residual: res.iter().copied().collect(),
        circulation,
    })
}

/// Assemble and solve in one step.
pub fn solve_boundary(boundary: &Boundary, config: &BemConfig) -> Result<Solution> {
    solve(&assemble(boundary, config)?)
}

/// Total vortex strength `sum int Im gamma dzeta`.
pub fn circulation(panels: &[Panel]) -> f64 {
    panels.iter().map(|p| p.total_strength().im).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::velocity_sum;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn circle(n: usize) -> Boundary {
        let nodes = (0..n)
            .map(|k| {
                let phi = 2.0 * PI * k as f64 / n as f64;
                EndpointData::geometric(Complex64::from_polar(1.0, phi), phi + PI / 2.0, vec![1.0, 0.0])
            })
            .collect();
        Boundary { nodes, closed: true }
    }

    fn far_error(sol: &Solution) -> f64 {
        let evs: Vec<PanelEvaluator> =
            sol.panels.iter().map(|p| PanelEvaluator::new(p.clone(), 1e-13).unwrap()).collect();
        (0..16)
            .map(|k| {
                let z = Complex64::from_polar(1.5, 2.0 * PI * (k as f64 + 0.3) / 16.0);
                let v = velocity_sum(&evs, z).unwrap() + 1.0;
                (v - (1.0 - 1.0 / (z * z))).norm()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn freestream_rhs_for_flat_panel() {
        // stream along the outward (right-hand) normal of a panel along +x
        let v = c(0.0, -2.0);
        assert!((freestream_flux(v, c(0.0, 0.0), c(3.0, 0.0)) - 6.0).abs() < 1e-15);
        let b = Boundary {
            nodes: vec![
                EndpointData::geometric(c(0.0, 0.0), 0.0, vec![]),
                EndpointData::geometric(c(3.0, 0.0), PI / 2.0, vec![]),
                EndpointData::geometric(c(0.0, 3.0), PI, vec![]),
            ],
            closed: true,
        };
        let mut cfg = BemConfig::new(1, 1);
        cfg.freestream = v;
        let sys = assemble(&b, &cfg).unwrap();
        assert!((sys.rhs[0] / sys.row_weights[0] + 3.0).abs() < 1e-14);
    }

    #[test]
    fn least_squares_basics() {
        let a = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        let b = DVector::from_vec(vec![3.0, 6.0]);
        let (x, r) = least_squares(&a, &b).unwrap();
        assert!((x[0] - 3.0).abs() < 1e-15 && r.norm() < 1e-14);

        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.5, 0.2, 1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![1.0, 2.0, 0.5]);
        let (x1, _) = least_squares(&a, &b).unwrap();
        let a2 = DMatrix::from_row_slice(4, 2, &[1.0, 0.5, 0.2, 1.0, 1.0, 1.0, 1.0, 1.0]);
        let b2 = DVector::from_vec(vec![1.0, 2.0, 0.5, 0.5]);
        let (x2, _) = least_squares(&a2, &b2).unwrap();
        // duplicating a row changes the weights of a least-squares fit, but not a consistent one
        let _ = (x1, x2);
        let a3 = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let b3 = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let a4 = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
        let b4 = DVector::from_vec(vec![1.0, 2.0, 3.0, 3.0]);
        let (x3, _) = least_squares(&a3, &b3).unwrap();
        let (x4, _) = least_squares(&a4, &b4).unwrap();
        assert!((x3 - x4).norm() < 1e-14);

        let sing = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        assert!(matches!(least_squares(&sing, &b3), Err(Error::SingularSystem(_))));
    }

    #[test]
    fn circulation_examples() {
        assert_eq!(circulation(&[]), 0.0);
        let p = Panel::new(c(0.0, 0.0), 0.0, 2.0, vec![0.0], vec![I]).unwrap();
        assert!((circulation(&[p]) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn circle_with_sources_reproduces_potential_flow() {
        let mut cfg = BemConfig::new(3, 1);
        cfg.total_source_zero = true;
        let sys = assemble(&circle(32), &cfg).unwrap();
        assert_eq!(sys.matrix.nrows(), 32 * 2 + 1);
        assert_eq!(sys.matrix.ncols(), 32);
        for r in 0..64 {
            assert!((sys.matrix.row(r).amax() - 1.0).abs() < 1e-15);
        }
        let sol = solve(&sys).unwrap();
        let err = far_error(&sol);
        assert!(err < 1e-4, "error {err}");
        let total: f64 = sol.panels.iter().map(|p| p.total_strength().re).sum();
        assert!(total.abs() < 1e-8);
        // shared nodes give continuous tangential strength
        for k in 0..32 {
            let a = &sol.panels[k];
            let b = &sol.panels[(k + 1) % 32];
            assert!((a.tangential_gamma(a.length) - b.tangential_gamma(0.0)).norm() < 1e-12);
        }
        let again = solve(&sys).unwrap();
        assert_eq!(again.node_values, sol.node_values);
    }

    #[test]
    fn collocation_rows_for_derivative_unknowns() {
        let mut cfg = BemConfig::new(3, 3);
        cfg.total_source_zero = true;
        let sys = assemble(&circle(16), &cfg).unwrap();
        // three fitted and two collocation sub-panels per panel, plus the constraint
        assert_eq!(sys.matrix.nrows(), 16 * 5 + 1);
        assert_eq!(sys.matrix.ncols(), 32);
        assert!((sys.matrix.row(48).amax() - cfg.collocation_weight).abs() < 1e-12);
        cfg.collocation_weight = 0.0;
        assert_eq!(assemble(&circle(16), &cfg).unwrap().matrix.nrows(), 16 * 3 + 1);
    }

    #[test]
    fn control_point_mode_agrees() {
        let mut cfg = BemConfig::new(3, 3);
        cfg.total_source_zero = true;
        let flux = solve_boundary(&circle(24), &cfg).unwrap();
        cfg.mode = BcMode::ControlPoint;
        let cp = solve_boundary(&circle(24), &cfg).unwrap();
        let (ef, ec) = (far_error(&flux), far_error(&cp));
        assert!(ef < 1e-4 && ec < 1e-4, "{ef} {ec}");
        assert!(ef < 10.0 * ec && ec < 10.0 * ef, "{ef} {ec}");
    }

    #[test]
    fn vortex_circle_with_kutta_node() {
        // a circle with one pinned node and a stream from the left: the exact
        // tangential strength 2 sin(phi - phi_k) vanishes at the pinned node
        let n = 32;
        let mut cfg = BemConfig::new(3, 1);
        cfg.components = vec![Component::Vortex];
        cfg.kutta_nodes = vec![0];
        let sol = solve_boundary(&circle(n), &cfg).unwrap();
        assert_eq!(sol.node_values[0][0], Complex64::new(0.0, 0.0));
        // stagnation at phi = 0 with circulation zero for a symmetric circle
        assert!(sol.circulation.abs() < 1e-3, "{}", sol.circulation);
    }

    #[test]
    fn invalid_configurations() {
        let mut cfg = BemConfig::new(2, 1);
        assert!(assemble(&circle(8), &cfg).is_err());
        cfg.shape_order = 3;
        let mut open = circle(8);
        open.closed = false;
        assert!(matches!(assemble(&open, &cfg), Err(Error::InvalidInput(_))));
        cfg.kutta_nodes = vec![99];
        assert!(assemble(&circle(8), &cfg).is_err());
    }
}
