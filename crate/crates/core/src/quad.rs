//! Quadrature rules: Gauss–Legendre, Gauss–Jacobi (Golub–Welsch), adaptive
//! Gauss–Kronrod 7/15 and geometrically graded composite rules for endpoint
//! singularities.

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

use crate::special::ln_gamma;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("adaptive quadrature did not converge: estimated error {achieved:e} > tolerance {requested:e}")]
    NoConvergence { achieved: f64, requested: f64 },
    #[error("non-finite integrand value at x = {0}")]
    NonFinite(f64),
}

/// A fixed rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// n-point Gauss–Legendre rule via Newton iteration on P_n.
    pub fn gauss_legendre(n: usize) -> Rule {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Rule { nodes, weights }
    }

    /// n-point Gauss–Jacobi rule for the weight (1-x)^alpha (1+x)^beta on [-1, 1].
    pub fn gauss_jacobi(n: usize, alpha: f64, beta: f64) -> Rule {
        assert!(n >= 1 && alpha > -1.0 && beta > -1.0);
        let ab = alpha + beta;
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for k in 0..n {
            let kf = k as f64;
            let diag = if k == 0 {
                (beta - alpha) / (ab + 2.0)
            } else {
                (beta * beta - alpha * alpha) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0))
            };
            jac[(k, k)] = diag;
            if k + 1 < n {
                let m = kf + 1.0;
                let s = 2.0 * m + ab;
                let num = 4.0 * m * (m + alpha) * (m + beta) * (m + ab);
                let den = s * s * (s + 1.0) * (s - 1.0);
                let off = (num / den).sqrt();
                jac[(k, k + 1)] = off;
                jac[(k + 1, k)] = off;
            }
        }
        let mu0 = ((ab + 1.0) * std::f64::consts::LN_2 + ln_gamma(alpha + 1.0) + ln_gamma(beta + 1.0)
            - ln_gamma(ab + 2.0))
            .exp();
        let eig = SymmetricEigen::new(jac);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let v0 = eig.eigenvectors[(0, i)];
                (eig.eigenvalues[i], mu0 * v0 * v0)
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Rule {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        }
    }

    /// Integrate f over [a, b] (plain affine map; weight functions are not rescaled).
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(c + h * x);
        }
        s * h
    }
}

/// ∫_c^b (b − μ)^{alpha} f(μ) dμ with a Gauss–Jacobi rule built for weight exponent `alpha`
/// (that is, `Rule::gauss_jacobi(n, alpha, 0.0)`).
pub fn integrate_right_weighted<F: FnMut(f64) -> f64>(rule: &Rule, alpha: f64, mut f: F, c: f64, b: f64) -> f64 {
    let h = 0.5 * (b - c);
    let mut s = 0.0;
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        s += w * f(c + h * (1.0 + x));
    }
    s * h.powf(alpha + 1.0)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre on [a, b] with cells shrinking geometrically (ratio
/// `q`) toward the chosen end(s). Suited to integrable endpoint singularities and kinks.
pub fn graded<F: FnMut(f64) -> f64>(
    rule: &Rule,
    mut f: F,
    a: f64,
    b: f64,
    grade_left: bool,
    grade_right: bool,
    levels: usize,
) -> f64 {
    if b <= a {
        return 0.0;
    }
    match (grade_left, grade_right) {
        (false, false) => rule.integrate(f, a, b),
        (true, true) => {
            let m = 0.5 * (a + b);
            graded_one(rule, &mut f, a, m, true, levels) + graded_one(rule, &mut f, m, b, false, levels)
        }
        (left, _) => graded_one(rule, &mut f, a, b, left, levels),
    }
}

fn graded_one<F: FnMut(f64) -> f64>(rule: &Rule, f: &mut F, a: f64, b: f64, toward_left: bool, levels: usize) -> f64 {
    let q: f64 = 0.2;
    let len = b - a;
    let mut s = 0.0;
    let mut hi = 1.0;
    let floor = 1e4 * f64::EPSILON * if toward_left { a.abs() } else { b.abs() };
    for _ in 0..levels {
        let lo = hi * q;
        // stop before nodes would round onto the endpoint
        if len * lo <= floor {
            break;
        }
        s += if toward_left {
            rule.integrate(&mut *f, a + len * lo, a + len * hi)
        } else {
            rule.integrate(&mut *f, b - len * hi, b - len * lo)
        };
        hi = lo;
    }
    s + if toward_left { rule.integrate(&mut *f, a, a + len * hi) } else { rule.integrate(&mut *f, b - len * hi, b) }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64), QuadError> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    if !fc.is_finite() {
        return Err(QuadError::NonFinite(c));
    }
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let x1 = c - h * XGK[i];
        let x2 = c + h * XGK[i];
        let (f1, f2) = (f(x1), f(x2));
        if !f1.is_finite() {
            return Err(QuadError::NonFinite(x1));
        }
        if !f2.is_finite() {
            return Err(QuadError::NonFinite(x2));
        }
        k += WGK[i] * (f1 + f2);
        if i % 2 == 1 {
            g += WG[i / 2] * (f1 + f2);
        }
    }
    Ok((k * h, ((k - g) * h).abs()))
}

/// Adaptive Gauss–Kronrod 7/15 with global error control (bisection of the
/// worst interval). Returns (value, error estimate).
pub fn adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<(f64, f64), QuadError> {
    if a == b {
        return Ok((0.0, 0.0));
    }
    let mut intervals: Vec<(f64, f64, f64, f64)> = Vec::new();
    let (v, e) = gk15(&mut f, a, b)?;
    intervals.push((a, b, v, e));
    let mut total = v;
    let mut err = e;
    for _ in 0..4000 {
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok((total, err));
        }
        // split the interval with the largest error
        let (idx, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .unwrap();
        let (lo, hi, v0, e0) = intervals.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&mut f, lo, mid)?;
        let (v2, e2) = gk15(&mut f, mid, hi)?;
        total += v1 + v2 - v0;
        err += e1 + e2 - e0;
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
    // recompute sums to shed accumulated rounding before judging
    total = intervals.iter().map(|i| i.2).sum();
    err = intervals.iter().map(|i| i.3).sum();
    if err <= abs_tol.max(rel_tol * total.abs()) {
        Ok((total, err))
    } else {
        Err(QuadError::NoConvergence { achieved: err, requested: abs_tol.max(rel_tol * total.abs()) })
    }
}
