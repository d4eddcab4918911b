//! Curved panels with polynomial shape and strength.
//!
//! A panel lives in a local frame anchored at `start` with its baseline rotated
//! by `angle`. A point at baseline coordinate `zeta` in `[0, length]` sits at
//! `start + (zeta + i*eta(zeta)) e^{i angle}` with `eta(zeta) = sum a_k zeta^k`
//! (real coefficients). The complex strength `gamma(zeta) = sum b_j zeta^j`
//! is a density per unit baseline length: the real part is source strength
//! and the imaginary part vortex strength.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::ComplexPoly;
use crate::series::Jet;

pub const DEFAULT_SLOPE_MAX: f64 = 2.0;

/// Series correction truncation: terms through `(eta'^2)^3`.
pub const DEFAULT_SERIES_ORDER: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    pub start: Complex64,
    pub angle: f64,
    pub length: f64,
    pub shape: Vec<f64>,
    pub strength: Vec<Complex64>,
}

/// Boundary data at one panel end point.
///
/// `curvature` holds `[kappa, dkappa/ds, ...]` and `strength_derivatives`
/// holds arclength derivatives of the tangential strength density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointData {
    pub position: Complex64,
    pub tangent_angle: f64,
    #[serde(default)]
    pub curvature: Vec<f64>,
    #[serde(default)]
    pub strength: Complex64,
    #[serde(default)]
    pub strength_derivatives: Vec<Complex64>,
}

impl EndpointData {
    pub fn geometric(position: Complex64, tangent_angle: f64, curvature: Vec<f64>) -> Self {
        Self {
            position,
            tangent_angle,
            curvature,
            strength: Complex64::new(0.0, 0.0),
            strength_derivatives: Vec::new(),
        }
    }

    /// Number of shape derivatives carried (tangent counts as the first).
    pub fn shape_derivative_count(&self) -> usize {
        1 + self.curvature.len()
    }
}

fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut r = a.rem_euclid(two_pi);
    if r > std::f64::consts::PI {
        r -= two_pi;
    }
    r
}

impl Panel {
    pub fn new(start: Complex64, angle: f64, length: f64, shape: Vec<f64>, strength: Vec<Complex64>) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidInput(format!("panel length must be positive and finite, got {length}")));
        }
        if !start.is_finite() || !angle.is_finite() {
            return Err(Error::InvalidInput("panel start and angle must be finite".into()));
        }
        if shape.iter().any(|a| !a.is_finite()) || strength.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidInput("panel coefficients must be finite".into()));
        }
        let shape = if shape.is_empty() { vec![0.0] } else { shape };
        let strength = if strength.is_empty() { vec![Complex64::new(0.0, 0.0)] } else { strength };
        Ok(Self { start, angle, length, shape, strength })
    }

    /// A straight panel from `a` to `b` with the given strength coefficients.
    pub fn straight(a: Complex64, b: Complex64, strength: Vec<Complex64>) -> Result<Self> {
        let d = b - a;
        Self::new(a, d.arg(), d.norm(), vec![0.0], strength)
    }

    pub fn rotation(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.angle)
    }

    pub fn local_coord(&self, z: Complex64) -> Complex64 {
        (z - self.start) * Complex64::from_polar(1.0, -self.angle)
    }

    pub fn to_global(&self, local: Complex64) -> Complex64 {
        self.start + local * self.rotation()
    }

    pub fn eta(&self, zeta: f64) -> f64 {
        self.shape.iter().rev().fold(0.0, |acc, &a| acc * zeta + a)
    }

    pub fn eta_derivative(&self, zeta: f64) -> f64 {
        self.shape
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (k, &a)| acc * zeta + a * k as f64)
    }

    /// Global position at baseline coordinate `zeta`.
    pub fn point(&self, zeta: f64) -> Complex64 {
        self.to_global(Complex64::new(zeta, self.eta(zeta)))
    }

    pub fn panel_point(&self, zeta: f64) -> Result<Complex64> {
        if !(0.0..=self.length).contains(&zeta) {
            return Err(Error::InvalidInput(format!("zeta {zeta} outside [0, {}]", self.length)));
        }
        Ok(self.point(zeta))
    }

    pub fn start_point(&self) -> Complex64 {
        self.point(0.0)
    }

    pub fn end_point(&self) -> Complex64 {
        self.point(self.length)
    }

    pub fn gamma(&self, zeta: f64) -> Complex64 {
        self.strength_poly().eval_real(zeta)
    }

    /// Strength density per unit arclength.
    pub fn tangential_gamma(&self, zeta: f64) -> Complex64 {
        let s = self.eta_derivative(zeta);
        self.gamma(zeta) / (1.0 + s * s).sqrt()
    }

    pub fn shape_poly(&self) -> ComplexPoly {
        ComplexPoly::from_real(&self.shape)
    }

    pub fn strength_poly(&self) -> ComplexPoly {
        ComplexPoly::new(self.strength.clone())
    }

    /// Strength coefficients in the normalized variable `t = zeta / length`.
    pub fn normalized_strength(&self) -> Vec<Complex64> {
        let mut f = 1.0;
        self.strength
            .iter()
            .map(|&b| {
                let v = b * f;
                f *= self.length;
                v
            })
            .collect()
    }

    pub fn with_strength(&self, strength: Vec<Complex64>) -> Self {
        let mut p = self.clone();
        p.strength = if strength.is_empty() { vec![Complex64::new(0.0, 0.0)] } else { strength };
        p
    }

    /// `int_0^length gamma(zeta) dzeta`
    pub fn total_strength(&self) -> Complex64 {
        self.strength_poly().integrate_range(0.0, self.length)
    }

    /// Largest `|eta'|` over the panel, from dense sampling.
    pub fn max_slope(&self) -> f64 {
        (0..=128)
            .map(|i| self.eta_derivative(self.length * i as f64 / 128.0).abs())
            .fold(0.0, f64::max)
    }

    fn max_second_derivative(&self) -> f64 {
        let d2 = ComplexPoly::from_real(&self.shape).derivative().derivative();
        (0..=128)
            .map(|i| d2.eval_real(self.length * i as f64 / 128.0).re.abs())
            .fold(0.0, f64::max)
    }

    /// Enclosing circle `(center, radius)` of the panel curve.
    pub fn bounding_circle(&self) -> (Complex64, f64) {
        const SAMPLES: usize = 256;
        let pts: Vec<Complex64> = (0..=SAMPLES)
            .map(|i| self.point(self.length * i as f64 / SAMPLES as f64))
            .collect();
        let (c, r) = min_enclosing_circle(&pts);
        let h = self.length / SAMPLES as f64;
        let sagitta = h * h / 8.0 * self.max_second_derivative() * 1.25;
        (c, r * (1.0 + 1e-12) + sagitta)
    }

    /// Splits at baseline coordinate `cut`. The second piece starts on the
    /// baseline, so its shape generally has a nonzero constant term.
    pub fn split(&self, cut: f64) -> Result<(Panel, Panel)> {
        if !(cut > 0.0 && cut < self.length) {
            return Err(Error::InvalidInput(format!("split point {cut} outside (0, {})", self.length)));
        }
        let first = Panel { length: cut, ..self.clone() };
        let s = Complex64::new(cut, 0.0);
        let shape: Vec<f64> = self.shape_poly().shift(s).coeffs().iter().map(|c| c.re).collect();
        let strength = self.strength_poly().shift(s).into_coeffs();
        let second = Panel {
            start: self.start + cut * self.rotation(),
            angle: self.angle,
            length: self.length - cut,
            shape,
            strength,
        };
        Ok((first, second))
    }

    /// Splits into `pieces` equal baseline intervals.
    pub fn split_uniform(&self, pieces: usize) -> Vec<Panel> {
        let mut out = Vec::with_capacity(pieces);
        let mut rest = self.clone();
        for k in 0..pieces.saturating_sub(1) {
            let cut = rest.length / (pieces - k) as f64;
            let (a, b) = rest.split(cut).expect("interior cut");
            out.push(a);
            rest = b;
        }
        out.push(rest);
        out
    }

    /// Taylor jet of `eta'` at `zeta` of the given order.
    pub fn slope_jet(&self, zeta: f64, order: usize) -> Jet {
        let mut d = self.shape_poly().derivative();
        let mut vals = Vec::with_capacity(order + 1);
        for _ in 0..=order {
            vals.push(d.eval_real(zeta));
            d = d.derivative();
        }
        Jet::from_derivatives(&vals)
    }

    /// Multiplies the strength by the truncated binomial series of
    /// `sqrt(1 + eta'^2)`, so that the input strength acts along the curve.
    pub fn strength_series_correction(&self, order: usize) -> Result<Panel> {
        let slope = self.max_slope();
        if slope >= 1.0 {
            return Err(Error::Convergence(format!(
                "slope {slope:.3} >= 1: split the panel before applying the series correction"
            )));
        }
        let d = self.shape_poly().derivative();
        let d2 = d.mul(&d);
        let mut term = ComplexPoly::constant(Complex64::new(1.0, 0.0));
        let mut factor = ComplexPoly::constant(Complex64::new(1.0, 0.0));
        let mut binom = 1.0;
        for k in 1..=order {
            binom *= (0.5 - (k as f64 - 1.0)) / k as f64;
            term = term.mul(&d2);
            factor = factor.add(&term.scale(Complex64::new(binom, 0.0)));
        }
        let b = self.strength_poly().mul(&factor);
        Ok(self.with_strength(b.into_coeffs()))
    }
}

/// Converts endpoint strength data given per unit arclength into derivatives
/// with respect to the baseline coordinate and applies the slope factor
/// `sqrt(1 + eta'^2)`.
///
/// `gamma_input` holds `gamma_in, d gamma_in / dzeta, ...`; `slope` holds
/// `eta', eta'', eta''', ...` at the same point (at least as many entries).
pub fn apply_strength_correction(gamma_input: &[Complex64], slope: &[f64]) -> Vec<Complex64> {
    if slope.iter().all(|&s| s == 0.0) {
        return gamma_input.to_vec();
    }
    let order = gamma_input.len() - 1;
    let slope_jet = Jet::from_real_derivatives(&padded(slope, order + 1)).truncate(order);
    let factor = slope_jet.mul(&slope_jet).add_const(Complex64::new(1.0, 0.0)).sqrt();
    Jet::from_derivatives(gamma_input).mul(&factor).derivatives()
}

/// Arclength derivatives of a density at a point to derivatives in the
/// baseline coordinate, given `eta', eta'', ...` there.
pub fn arclength_to_baseline(gamma_s: &[Complex64], slope: &[f64]) -> Vec<Complex64> {
    let order = gamma_s.len() - 1;
    if order == 0 {
        return gamma_s.to_vec();
    }
    let slope_jet = Jet::from_real_derivatives(&padded(slope, order)).truncate(order - 1);
    let ds = slope_jet.mul(&slope_jet).add_const(Complex64::new(1.0, 0.0)).sqrt();
    let sigma = ds.integrate(Complex64::new(0.0, 0.0));
    Jet::from_derivatives(gamma_s).compose(&sigma).derivatives()
}

fn padded(v: &[f64], n: usize) -> Vec<f64> {
    let mut out = v.to_vec();
    out.resize(n.max(1), 0.0);
    out
}

/// `eta^(k)` at an end point for `k = 1..=count`, from arclength data in the frame rotated by `frame_angle`.
fn local_shape_derivatives(end: &EndpointData, frame_angle: f64, count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let alpha0 = wrap_angle(end.tangent_angle - frame_angle);
    if alpha0.cos() <= 1e-8 {
        return Err(Error::Geometry(format!(
            "end point tangent turns {:.1} degrees from the baseline; the shape is not a graph over it",
            alpha0.to_degrees()
        )));
    }
    // alpha(sigma) from [alpha0, kappa, dkappa/ds, ...]
    let mut alpha_derivs = vec![alpha0];
    alpha_derivs.extend(end.curvature.iter().take(count - 1));
    alpha_derivs.resize(count, 0.0);
    let alpha = Jet::from_real_derivatives(&alpha_derivs);
    let i = Complex64::new(0.0, 1.0);
    let w = alpha.scale(i).exp().integrate(Complex64::new(0.0, 0.0));
    let x = w.re();
    let y = w.im();
    let sigma_of_x = x.revert();
    let eta = y.compose(&sigma_of_x);
    Ok(eta.derivatives().iter().skip(1).map(|v| v.re).collect())
}

/// Hermite fit in `t = zeta / length`: derivative values (w.r.t. zeta) at both
/// ends, returns coefficients in zeta.
fn hermite_coefficients<T>(at_start: &[T], at_end: &[T], length: f64) -> Result<Vec<T>>
where
    T: nalgebra::ComplexField<RealField = f64> + Copy,
{
    let d = at_start.len();
    assert_eq!(d, at_end.len());
    let n = 2 * d;
    let mut a = nalgebra::DMatrix::<T>::zeros(n, n);
    let mut rhs = nalgebra::DVector::<T>::zeros(n);
    let mut lp = 1.0;
    for m in 0..d {
        // d^m/dt^m (sum alpha_k t^k) at t = 0 and t = 1
        let mut fact = 1.0;
        for j in 1..=m {
            fact *= j as f64;
        }
        a[(m, m)] = T::from_real(fact);
        for k in m..n {
            let mut falling = 1.0;
            for j in 0..m {
                falling *= (k - j) as f64;
            }
            a[(d + m, k)] = T::from_real(falling);
        }
        rhs[m] = at_start[m].scale(lp);
        rhs[d + m] = at_end[m].scale(lp);
        lp *= length;
    }
    let sol = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Internal("singular Hermite system".into()))?;
    let mut scale = 1.0;
    Ok(sol
        .iter()
        .map(|&v| {
            let out = v.unscale(scale);
            scale *= length;
            out
        })
        .collect())
}

/// Strength coefficients for a built shape from tangential strength data at
/// both ends (value plus arclength derivatives).
pub fn strength_from_endpoint_data(
    shape: &Panel,
    start: &[Complex64],
    end: &[Complex64],
) -> Result<Vec<Complex64>> {
    if start.len() != end.len() || start.is_empty() {
        return Err(Error::InvalidInput("strength data counts must match and be non-empty".into()));
    }
    let order = start.len() - 1;
    let at = |zeta: f64, data: &[Complex64]| {
        let slope: Vec<f64> = shape.slope_jet(zeta, order).derivatives().iter().map(|v| v.re).collect();
        let in_zeta = arclength_to_baseline(data, &slope);
        apply_strength_correction(&in_zeta, &slope)
    };
    let a = at(0.0, start);
    let b = at(shape.length, end);
    hermite_coefficients(&a, &b, shape.length)
}

/// Builds a panel of shape degree `order` between two end points.
pub fn build_panel(end_a: &EndpointData, end_b: &EndpointData, order: usize, slope_max: f64) -> Result<Panel> {
    if order % 2 == 0 {
        return Err(Error::InvalidInput(format!("shape order must be odd, got {order}")));
    }
    let d = (order - 1) / 2;
    if end_a.shape_derivative_count() < d || end_b.shape_derivative_count() < d {
        return Err(Error::InvalidInput(format!(
            "order {order} needs {d} shape derivatives at each end"
        )));
    }
    if end_a.strength_derivatives.len() != end_b.strength_derivatives.len() {
        return Err(Error::InvalidInput("strength derivative counts differ between the ends".into()));
    }
    let chord = end_b.position - end_a.position;
    let length = chord.norm();
    if !(length > 0.0) || !length.is_finite() {
        return Err(Error::InvalidInput("panel end points coincide".into()));
    }
    let angle = chord.arg();
    let mut start_d = vec![0.0];
    start_d.extend(local_shape_derivatives(end_a, angle, d)?);
    let mut end_d = vec![0.0];
    end_d.extend(local_shape_derivatives(end_b, angle, d)?);
    let shape = hermite_coefficients(&start_d, &end_d, length)?;
    let mut panel = Panel::new(end_a.position, angle, length, shape, vec![])?;
    let slope = panel.max_slope();
    if slope > slope_max {
        return Err(Error::SlopeViolation { max_slope: slope, limit: slope_max });
    }
    let mut sa = vec![end_a.strength];
    sa.extend(&end_a.strength_derivatives);
    let mut sb = vec![end_b.strength];
    sb.extend(&end_b.strength_derivatives);
    panel.strength = strength_from_endpoint_data(&panel, &sa, &sb)?;
    Ok(panel)
}

fn circle_two(a: Complex64, b: Complex64) -> (Complex64, f64) {
    let c = (a + b) * 0.5;
    (c, (a - c).norm())
}

fn circle_three(a: Complex64, b: Complex64, c: Complex64) -> (Complex64, f64) {
    let bx = b - a;
    let cx = c - a;
    let d = 2.0 * (bx.re * cx.im - bx.im * cx.re);
    if d.abs() < 1e-300 {
        // collinear: widest pair
        let cands = [circle_two(a, b), circle_two(a, c), circle_two(b, c)];
        return cands.into_iter().fold((a, 0.0), |m, x| if x.1 > m.1 { x } else { m });
    }
    let b2 = bx.norm_sqr();
    let c2 = cx.norm_sqr();
    let ux = (cx.im * b2 - bx.im * c2) / d;
    let uy = (bx.re * c2 - cx.re * b2) / d;
    let center = a + Complex64::new(ux, uy);
    (center, Complex64::new(ux, uy).norm())
}

/// Smallest enclosing circle (incremental Welzl over a fixed pseudo-random order).
pub fn min_enclosing_circle(points: &[Complex64]) -> (Complex64, f64) {
    let mut p = points.to_vec();
    let mut state = 0x9E3779B97F4A7C15u64;
    for i in (1..p.len()).rev() {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let j = (state >> 33) as usize % (i + 1);
        p.swap(i, j);
    }
    let inside = |c: Complex64, r: f64, q: Complex64| (q - c).norm() <= r * (1.0 + 1e-14) + 1e-300;
    let (mut c, mut r) = (p[0], 0.0);
    for i in 1..p.len() {
        if inside(c, r, p[i]) {
            continue;
        }
        c = p[i];
        r = 0.0;
        for j in 0..i {
            if inside(c, r, p[j]) {
                continue;
            }
            (c, r) = circle_two(p[i], p[j]);
            for k in 0..j {
                if !inside(c, r, p[k]) {
                    (c, r) = circle_three(p[i], p[j], p[k]);
                }
            }
        }
    }
    (c, r)
}
