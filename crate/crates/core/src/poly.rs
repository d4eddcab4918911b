//! Complex polynomials in ascending coefficient order, with the handful of
//! operations the panel formulas need: Horner evaluation, exact integration,
//! Taylor shifts, division, Aberth–Ehrlich root finding and partial fractions.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Coefficients with magnitude at or below this fraction of the largest one
/// are treated as absent when determining the degree.
pub const STRUCTURAL_ZERO: f64 = 1e-13;

/// Roots `x_j`, `x_k` are paired when `|x_j - x_k| < NEAR_DOUBLE_FACTOR * min(|x_k|, |x_k - lambda|)`.
pub const NEAR_DOUBLE_FACTOR: f64 = 0.1;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPoly {
    coeffs: Vec<Complex64>,
}

impl ComplexPoly {
    /// Builds a polynomial from ascending coefficients. An empty list is the zero polynomial.
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        if coeffs.is_empty() {
            return Self::zero();
        }
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Self { coeffs: vec![ZERO] }
    }

    pub fn constant(c: Complex64) -> Self {
        Self { coeffs: vec![c] }
    }

    /// `prod (x - r_k)`
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut p = Self::constant(ONE);
        for &r in roots {
            p = p.mul(&Self::new(vec![-r, ONE]));
        }
        p
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Degree after dropping structurally-zero leading coefficients.
    pub fn degree(&self) -> usize {
        self.degree_with_scale(self.max_abs())
    }

    /// Degree using an explicit magnitude scale for the structural-zero test.
    pub fn degree_with_scale(&self, scale: f64) -> usize {
        let tol = STRUCTURAL_ZERO * scale;
        self.coeffs
            .iter()
            .rposition(|c| c.norm() > tol)
            .unwrap_or(0)
    }

    pub fn trimmed(&self) -> Self {
        let d = self.degree();
        Self::new(self.coeffs[..=d].to_vec())
    }

    pub fn truncated(&self, degree: usize) -> Self {
        let n = (degree + 1).min(self.coeffs.len());
        Self::new(self.coeffs[..n].to_vec())
    }

    pub fn leading(&self) -> Complex64 {
        self.coeffs[self.degree()]
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * x + c)
    }

    pub fn eval_real(&self, x: f64) -> Complex64 {
        self.eval(Complex64::new(x, 0.0))
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero();
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    /// Antiderivative with zero constant term.
    pub fn integrate(&self) -> Self {
        let mut out = Vec::with_capacity(self.coeffs.len() + 1);
        out.push(ZERO);
        out.extend(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| c / (k as f64 + 1.0)),
        );
        Self::new(out)
    }

    /// `int_a^b p(x) dx`
    pub fn integrate_range(&self, a: f64, b: f64) -> Complex64 {
        let anti = self.integrate();
        anti.eval_real(b) - anti.eval_real(a)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    /// `q(x) = p(s * x)`
    pub fn scale_arg(&self, s: f64) -> Self {
        let mut f = 1.0;
        Self::new(
            self.coeffs
                .iter()
                .map(|&c| {
                    let v = c * f;
                    f *= s;
                    v
                })
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new(
            (0..n)
                .map(|k| {
                    self.coeffs.get(k).copied().unwrap_or(ZERO)
                        + other.coeffs.get(k).copied().unwrap_or(ZERO)
                })
                .collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-ONE))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = vec![ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == ZERO {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// Product truncated to `max_degree`.
    pub fn mul_truncated(&self, other: &Self, max_degree: usize) -> Self {
        let n = (self.coeffs.len() + other.coeffs.len() - 1).min(max_degree + 1);
        let mut out = vec![ZERO; n];
        for (i, &a) in self.coeffs.iter().enumerate().take(n) {
            for (j, &b) in other.coeffs.iter().enumerate().take(n - i) {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// Taylor shift: returns `q` with `q(x) = p(x + s)`.
    pub fn shift(&self, s: Complex64) -> Self {
        let mut c = self.coeffs.clone();
        let n = c.len();
        for i in 0..n {
            for k in (i..n - 1).rev() {
                let upper = c[k + 1];
                c[k] += s * upper;
            }
        }
        Self::new(c)
    }

    /// Long division `self = q * den + r` with `deg r < deg den`.
    pub fn divide(&self, den: &Self) -> Result<(Self, Self)> {
        let d = den.trimmed();
        let lead = d.coeffs[d.coeffs.len() - 1];
        if lead == ZERO || !lead.is_finite() {
            return Err(Error::InvalidInput("division by the zero polynomial".into()));
        }
        let dd = d.coeffs.len() - 1;
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return Ok((Self::zero(), self.clone()));
        }
        let nq = rem.len() - dd;
        let mut q = vec![ZERO; nq];
        for k in (0..nq).rev() {
            let t = rem[k + dd] / lead;
            q[k] = t;
            for (j, &dc) in d.coeffs.iter().enumerate() {
                rem[k + j] -= t * dc;
            }
        }
        rem.truncate(dd.max(1));
        Ok((Self::new(q), Self::new(rem)))
    }

    /// All `deg(p)` roots with multiplicity.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        if !self.is_finite() {
            return Err(Error::InvalidInput("non-finite polynomial coefficient".into()));
        }
        let p = self.trimmed();
        let n = p.coeffs.len() - 1;
        if n == 0 {
            return Err(Error::InvalidInput("root finding needs degree >= 1".into()));
        }
        roots_aberth(p.coeffs())
    }
}

/// Aberth–Ehrlich iteration on a trimmed coefficient list, followed by a Newton polish.
fn roots_aberth(c: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = c.len() - 1;
    let lead = c[n];
    let monic: Vec<Complex64> = c.iter().map(|&v| v / lead).collect();
    match n {
        1 => return Ok(vec![-monic[0]]),
        2 => return Ok(quadratic_roots(monic[1], monic[0]).to_vec()),
        _ => {}
    }

    let mut x = initial_guesses(&monic);
    let deriv: Vec<Complex64> = (1..=n).map(|k| monic[k] * k as f64).collect();
    let horner = |coef: &[Complex64], z: Complex64| coef.iter().rev().fold(ZERO, |a, &b| a * z + b);

    let mut converged = vec![false; n];
    for _ in 0..500 {
        let mut all = true;
        for k in 0..n {
            if converged[k] {
                continue;
            }
            let xk = x[k];
            let pv = horner(&monic, xk);
            if pv == ZERO {
                converged[k] = true;
                continue;
            }
            let dv = horner(&deriv, xk);
            let ratio = pv / dv;
            let mut sum = ZERO;
            for j in 0..n {
                if j != k {
                    sum += ONE / (xk - x[j]);
                }
            }
            let step = ratio / (ONE - ratio * sum);
            if !step.is_finite() {
                continue;
            }
            x[k] = xk - step;
            if step.norm() <= 4.0 * f64::EPSILON * x[k].norm().max(f64::MIN_POSITIVE) {
                converged[k] = true;
            } else {
                all = false;
            }
        }
        if all {
            break;
        }
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Convergence("root iteration produced non-finite values".into()));
    }
    // Newton polish on the monic polynomial; keep a step only when it reduces |p|.
    for xk in x.iter_mut() {
        for _ in 0..2 {
            let pv = horner(&monic, *xk);
            let dv = horner(&deriv, *xk);
            if dv == ZERO {
                break;
            }
            let cand = *xk - pv / dv;
            if cand.is_finite() && horner(&monic, cand).norm() < pv.norm() {
                *xk = cand;
            } else {
                break;
            }
        }
    }
    Ok(x)
}

fn quadratic_roots(b: Complex64, c: Complex64) -> [Complex64; 2] {
    // x^2 + b x + c, cancellation-free form
    let disc = (b * b - c * 4.0).sqrt();
    let s = if (b.conj() * disc).re >= 0.0 { -(b + disc) * 0.5 } else { -(b - disc) * 0.5 };
    if s == ZERO {
        return [ZERO, ZERO];
    }
    [s, c / s]
}

/// Starting points on circles whose radii follow the Newton polygon of `|c_k|`.
fn initial_guesses(monic: &[Complex64]) -> Vec<Complex64> {
    let n = monic.len() - 1;
    let pts: Vec<(usize, f64)> = monic
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() > 0.0)
        .map(|(k, c)| (k, c.norm().ln()))
        .collect();
    // upper convex hull
    let mut hull: Vec<(usize, f64)> = Vec::new();
    for &p in &pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 as f64 - a.0 as f64) * (p.1 - a.1) - (b.1 - a.1) * (p.0 as f64 - a.0 as f64);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let mut out = Vec::with_capacity(n);
    let offset = 0.4;
    for w in hull.windows(2) {
        let (i, li) = w[0];
        let (j, lj) = w[1];
        let m = j - i;
        let r = ((li - lj) / m as f64).exp();
        for k in 0..m {
            let ang = 2.0 * std::f64::consts::PI * (k as f64) / (m as f64) + offset + out.len() as f64 * 0.17;
            out.push(Complex64::from_polar(r, ang));
        }
    }
    // zero constant term: hull starts above 0; missing roots sit at the origin
    while out.len() < n {
        let k = out.len();
        out.push(Complex64::from_polar(1e-3, k as f64));
    }
    out.truncate(n);
    out
}

/// `h(x_k) / prod_{n != k} (x_k - x_n)` for every root.
pub fn residues(h: &ComplexPoly, roots: &[Complex64]) -> Vec<Complex64> {
    roots
        .iter()
        .enumerate()
        .map(|(k, &xk)| {
            let denom = roots
                .iter()
                .enumerate()
                .filter(|&(n, _)| n != k)
                .fold(ONE, |acc, (_, &xn)| acc * (xk - xn));
            h.eval(xk) / denom
        })
        .collect()
}

/// True when two roots must be handled together over the interval `[0, lambda]`.
pub fn roots_paired(xj: Complex64, xk: Complex64, lambda: f64) -> bool {
    let reach = xk.norm().min((xk - lambda).norm());
    (xj - xk).norm() < NEAR_DOUBLE_FACTOR * reach
}

/// `scale * (poly_part(x) + sum_k residues[k] / (x - roots[k]))`
#[derive(Debug, Clone, PartialEq)]
pub struct PartialFractionForm {
    pub poly_part: ComplexPoly,
    pub roots: Vec<Complex64>,
    pub residues: Vec<Complex64>,
    pub scale: Complex64,
}

impl PartialFractionForm {
    pub fn eval(&self, x: Complex64) -> Complex64 {
        let tail: Complex64 = self
            .roots
            .iter()
            .zip(&self.residues)
            .map(|(&r, &a)| a / (x - r))
            .sum();
        self.scale * (self.poly_part.eval(x) + tail)
    }
}

/// Decomposes `num / den` on the interval `[0, lambda]` (the interval only
/// enters the near-double-root test).
pub fn partial_fractions(num: &ComplexPoly, den: &ComplexPoly, lambda: f64) -> Result<PartialFractionForm> {
    let den = den.trimmed();
    if den.degree() == 0 {
        return Err(Error::InvalidInput("denominator must have degree >= 1".into()));
    }
    let lead = den.leading();
    let roots = den.roots()?;
    for j in 0..roots.len() {
        for k in (j + 1)..roots.len() {
            if roots_paired(roots[j], roots[k], lambda) || roots_paired(roots[k], roots[j], lambda) {
                return Err(Error::NearDoubleRoots(j, k));
            }
        }
    }
    let monic = ComplexPoly::from_roots(&roots);
    let (q, h) = num.divide(&monic)?;
    let res = residues(&h, &roots);
    Ok(PartialFractionForm { poly_part: q, roots, residues: res, scale: ONE / lead })
}
