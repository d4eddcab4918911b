//! Plain numerical quadrature: Gauss–Legendre rules and adaptive
//! Gauss–Kronrod (7/15) for complex-valued integrands. Used for the error
//! metric contours and as an independent reference in tests.

use num_complex::Complex64;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        rk += s * WGK[j];
        if j % 2 == 1 {
            rg += s * WG[j / 2];
        }
    }
    (rk * h, ((rk - rg) * h).norm())
}

/// Adaptive bisection with a G7/K15 pair. Returns the integral and the
/// accumulated error estimate. Stops refining an interval when its local
/// error is below `max(rel_tol * |I|, abs_tol)` scaled by its share of the range.
pub fn adaptive_gauss_kronrod<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> (Complex64, f64) {
    let (whole, err0) = gk15(f, a, b);
    let mut stack = vec![(a, b, whole, err0, 0u32)];
    let mut total = Complex64::new(0.0, 0.0);
    let mut total_err = 0.0;
    let scale = whole.norm().max(abs_tol);
    while let Some((lo, hi, val, err, depth)) = stack.pop() {
        let share = (hi - lo) / (b - a);
        if err <= (rel_tol * scale).max(abs_tol) * share.max(1e-3) || depth > 60 {
            total += val;
            total_err += err;
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(f, lo, mid);
        let (v2, e2) = gk15(f, mid, hi);
        stack.push((lo, mid, v1, e1, depth + 1));
        stack.push((mid, hi, v2, e2, depth + 1));
    }
    (total, total_err)
}

/// Composite Gauss–Legendre over `[a, b]` split into `pieces` equal parts.
pub fn composite_gauss_legendre<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64, pieces: usize, rule: &(Vec<f64>, Vec<f64>)) -> Complex64 {
    let (x, w) = rule;
    let h = (b - a) / pieces as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    for p in 0..pieces {
        let lo = a + p as f64 * h;
        let c = lo + 0.5 * h;
        for (xi, wi) in x.iter().zip(w) {
            sum += f(c + 0.5 * h * xi) * (wi * 0.5 * h);
        }
    }
    sum
}
