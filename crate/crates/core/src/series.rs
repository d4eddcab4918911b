//! Truncated Taylor series ("jets") in one real variable with complex
//! coefficients. Used to carry endpoint derivatives through conformal maps,
//! arclength reparameterizations and the strength correction factor.

use num_complex::Complex64;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// `c[0] + c[1] h + ... + c[n] h^n + O(h^{n+1})`
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub c: Vec<Complex64>,
}

impl Jet {
    pub fn new(c: Vec<Complex64>) -> Self {
        assert!(!c.is_empty());
        Self { c }
    }

    pub fn constant(v: Complex64, order: usize) -> Self {
        let mut c = vec![ZERO; order + 1];
        c[0] = v;
        Self { c }
    }

    /// `v + h`
    pub fn variable(v: Complex64, order: usize) -> Self {
        let mut j = Self::constant(v, order);
        if order >= 1 {
            j.c[1] = Complex64::new(1.0, 0.0);
        }
        j
    }

    /// Jet from derivative values `f, f', f'', ...`
    pub fn from_derivatives(d: &[Complex64]) -> Self {
        let mut fact = 1.0;
        Self::new(
            d.iter()
                .enumerate()
                .map(|(k, &v)| {
                    if k > 0 {
                        fact *= k as f64;
                    }
                    v / fact
                })
                .collect(),
        )
    }

    pub fn from_real_derivatives(d: &[f64]) -> Self {
        Self::from_derivatives(&d.iter().map(|&v| Complex64::new(v, 0.0)).collect::<Vec<_>>())
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    /// Derivative values `f^(k)(0)`.
    pub fn derivatives(&self) -> Vec<Complex64> {
        let mut fact = 1.0;
        self.c
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                if k > 0 {
                    fact *= k as f64;
                }
                v * fact
            })
            .collect()
    }

    pub fn value(&self) -> Complex64 {
        self.c[0]
    }

    fn zip(&self, o: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        let n = self.c.len().min(o.c.len());
        Self::new((0..n).map(|k| f(self.c[k], o.c[k])).collect())
    }

    pub fn add(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a - b)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(self.c.iter().map(|&v| v * s).collect())
    }

    pub fn add_const(&self, s: Complex64) -> Self {
        let mut j = self.clone();
        j.c[0] += s;
        j
    }

    pub fn conj(&self) -> Self {
        Self::new(self.c.iter().map(|v| v.conj()).collect())
    }

    pub fn re(&self) -> Self {
        Self::new(self.c.iter().map(|v| Complex64::new(v.re, 0.0)).collect())
    }

    pub fn im(&self) -> Self {
        Self::new(self.c.iter().map(|v| Complex64::new(v.im, 0.0)).collect())
    }

    pub fn mul(&self, o: &Self) -> Self {
        let n = self.c.len().min(o.c.len());
        let mut out = vec![ZERO; n];
        for i in 0..n {
            for j in 0..n - i {
                out[i + j] += self.c[i] * o.c[j];
            }
        }
        Self::new(out)
    }

    pub fn recip(&self) -> Self {
        let n = self.c.len();
        let a0 = self.c[0];
        let mut out = vec![ZERO; n];
        out[0] = 1.0 / a0;
        for k in 1..n {
            let mut s = ZERO;
            for j in 1..=k {
                s += self.c[j] * out[k - j];
            }
            out[k] = -s / a0;
        }
        Self::new(out)
    }

    pub fn div(&self, o: &Self) -> Self {
        self.mul(&o.recip())
    }

    /// Term-wise derivative, one order shorter.
    pub fn derivative(&self) -> Self {
        if self.c.len() == 1 {
            return Self::constant(ZERO, 0);
        }
        Self::new((1..self.c.len()).map(|k| self.c[k] * k as f64).collect())
    }

    /// Antiderivative with constant `c0`, one order longer.
    pub fn integrate(&self, c0: Complex64) -> Self {
        let mut out = Vec::with_capacity(self.c.len() + 1);
        out.push(c0);
        out.extend(self.c.iter().enumerate().map(|(k, &v)| v / (k as f64 + 1.0)));
        Self::new(out)
    }

    pub fn truncate(&self, order: usize) -> Self {
        Self::new(self.c[..(order + 1).min(self.c.len())].to_vec())
    }

    pub fn exp(&self) -> Self {
        // f' = f * g'
        let n = self.c.len();
        let mut out = vec![ZERO; n];
        out[0] = self.c[0].exp();
        for k in 1..n {
            let mut s = ZERO;
            for j in 1..=k {
                s += self.c[j] * out[k - j] * j as f64;
            }
            out[k] = s / k as f64;
        }
        Self::new(out)
    }

    /// Principal-branch logarithm of the constant term.
    pub fn ln(&self) -> Self {
        let d = self.derivative().mul(&self.recip().truncate(self.order().saturating_sub(1)));
        d.integrate(self.c[0].ln()).truncate(self.order())
    }

    pub fn powc(&self, p: Complex64) -> Self {
        self.ln().scale(p).exp()
    }

    pub fn sqrt(&self) -> Self {
        self.powc(Complex64::new(0.5, 0.0))
    }

    /// `self(inner(h))` where `inner(0) = 0`; `self` is a series in its own variable.
    pub fn compose(&self, inner: &Self) -> Self {
        let n = self.c.len().min(inner.c.len());
        let mut out = vec![ZERO; n];
        let mut pow = Self::constant(Complex64::new(1.0, 0.0), n - 1);
        let mut inner0 = inner.truncate(n - 1);
        inner0.c[0] = ZERO;
        for k in 0..n {
            for (i, v) in pow.c.iter().enumerate() {
                out[i] += self.c[k] * v;
            }
            pow = pow.mul(&inner0);
        }
        Self::new(out)
    }

    /// Series reversion of `self - self(0)`: returns `g` with `self(g(y)) - self(0) = y`.
    pub fn revert(&self) -> Self {
        let n = self.c.len();
        let mut f = self.clone();
        f.c[0] = ZERO;
        let mut g = vec![ZERO; n];
        if n > 1 {
            g[1] = 1.0 / f.c[1];
        }
        // fixed-point refinement on coefficients: g <- g - (f(g) - y) / f'(0)
        for _ in 0..n {
            let gj = Self::new(g.clone());
            let fg = f.compose(&gj);
            for k in 2..n {
                g[k] -= fg.c[k] / f.c[1];
            }
        }
        Self::new(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    #[test]
    fn exp_ln_round_trip() {
        let j = Jet::new(vec![r(2.0), r(0.3), r(-0.7), r(0.1), r(0.05)]);
        let back = j.ln().exp();
        for (a, b) in back.c.iter().zip(&j.c) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn sqrt_squares_back() {
        let j = Jet::new(vec![r(1.5), r(0.3), r(-0.7), r(0.1)]);
        let s = j.sqrt();
        let sq = s.mul(&s);
        for (a, b) in sq.c.iter().zip(&j.c) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn reversion_of_sine() {
        // asin(y) = y + y^3/6 + 3 y^5 / 40
        let sin = Jet::new(vec![r(0.0), r(1.0), r(0.0), r(-1.0 / 6.0), r(0.0), r(1.0 / 120.0)]);
        let g = sin.revert();
        let want = [0.0, 1.0, 0.0, 1.0 / 6.0, 0.0, 3.0 / 40.0];
        for (a, b) in g.c.iter().zip(want) {
            assert!((a.re - b).abs() < 1e-14, "{a} vs {b}");
        }
    }

    #[test]
    fn derivative_round_trip() {
        let d = [r(1.0), r(2.0), r(-6.0), r(24.0)];
        let j = Jet::from_derivatives(&d);
        assert_eq!(j.c[3], r(4.0));
        assert_eq!(j.derivatives(), d.to_vec());
    }
}
