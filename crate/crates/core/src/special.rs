//! Special functions used throughout: Γ, the upper incomplete Γ, and integer-order
//! Bessel functions of the first kind together with their zeros.
//!
//! Bessel strategy: power series for `x <= 12`, Hankel asymptotics for `J_0`, `J_1`
//! beyond that, forward recurrence while `n < x`, Miller's backward recurrence for
//! `n >= x`.

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecialError {
    #[error("could not bracket Bessel zero (nu = {nu}, k = {k})")]
    Bracket { nu: usize, k: usize },
    #[error("incomplete gamma requires a > 0 and x >= 0 (a = {a}, x = {x})")]
    IncompleteGammaDomain { a: f64, x: f64 },
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Γ(x). Reflection is used below 1/2.
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        // negative integers are poles
        if x == x.floor() {
            return f64::NAN;
        }
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    // integers: exact factorials keep recursions like Γ(n+1) = nΓ(n) exact
    if x == x.floor() && x <= 171.0 {
        let mut f = 1.0;
        let mut k = 2.0;
        while k < x {
            f *= k;
            k += 1.0;
        }
        return f;
    }
    if x > 140.0 {
        return ln_gamma(x).exp();
    }
    let y = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (y + i as f64);
    }
    let t = y + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(y + 0.5) * (-t).exp() * acc
}

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        return (PI / (PI * x).sin()).abs().ln() - ln_gamma(1.0 - x);
    }
    let y = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (y + i as f64);
    }
    let t = y + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (y + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized upper incomplete gamma Q(a, x) = Γ(a, x)/Γ(a).
pub fn gamma_q(a: f64, x: f64) -> Result<f64, SpecialError> {
    if !(a > 0.0) || !(x >= 0.0) {
        return Err(SpecialError::IncompleteGammaDomain { a, x });
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    let prefactor = (a * x.ln() - x - ln_gamma(a)).exp();
    if x < a + 1.0 {
        // series for P
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut n = 1.0;
        while term.abs() > sum.abs() * 1e-17 && n < 10_000.0 {
            term *= x / (a + n);
            sum += term;
            n += 1.0;
        }
        Ok((1.0 - prefactor * sum).max(0.0))
    } else {
        // modified Lentz continued fraction
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        Ok(prefactor * h)
    }
}

/// Upper incomplete gamma Γ(a, x).
pub fn upper_incomplete_gamma(a: f64, x: f64) -> Result<f64, SpecialError> {
    Ok(gamma_q(a, x)? * gamma(a))
}

const SERIES_CUTOFF: f64 = 12.0;

fn bessel_series(n: usize, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = (n as f64 * half.ln() - ln_gamma(n as f64 + 1.0)).exp();
    let mut sum = term;
    let q = half * half;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= -q / (k * (k + n as f64));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs().max(1e-300) && k > half {
            break;
        }
        if k > 500.0 {
            break;
        }
    }
    sum
}

/// Hankel asymptotic expansion for order nu in {0, 1}.
fn bessel_hankel(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut prev = f64::INFINITY;
    let eightx = 8.0 * x;
    for k in 1..60 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        let next = term * (mu - odd * odd) / (kf * eightx);
        // asymptotic: stop at the smallest term
        if next.abs() >= prev {
            break;
        }
        prev = next.abs();
        term = next;
        // a_k/x^k enters P (k even) or Q (k odd) with alternating signs
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - (0.5 * nu + 0.25) * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Bessel function of the first kind J_n(x) for integer n >= 0, x >= 0.
pub fn bessel_j(n: usize, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if x <= SERIES_CUTOFF {
        return bessel_series(n, x);
    }
    let j0 = bessel_hankel(0.0, x);
    if n == 0 {
        return j0;
    }
    let j1 = bessel_hankel(1.0, x);
    if n == 1 {
        return j1;
    }
    let m = x.floor() as usize;
    // forward recurrence in the oscillatory region
    let mut prev = j0;
    let mut cur = j1;
    let top = n.min(m.max(1));
    for k in 1..top {
        let next = 2.0 * k as f64 / x * cur - prev;
        prev = cur;
        cur = next;
    }
    if n <= m {
        return cur;
    }
    // here cur = J_m, prev = J_{m-1}; Miller from above, normalized on (m-1, m)
    let start = n + 20 + (40.0 * n as f64).sqrt().ceil() as usize;
    let mut fp1 = 0.0;
    let mut f = 1e-30;
    let mut f_n = 0.0;
    let mut f_m = 0.0;
    let mut f_m1 = 0.0;
    let mut k = start;
    while k >= 1 {
        // f = f_k, fp1 = f_{k+1}
        if k == n {
            f_n = f;
        }
        if k == m {
            f_m = f;
        }
        if k + 1 == m {
            f_m1 = f;
            break;
        }
        let fm = 2.0 * k as f64 / x * f - fp1;
        fp1 = f;
        f = fm;
        k -= 1;
        if f.abs() > 1e250 {
            f *= 1e-250;
            fp1 *= 1e-250;
            f_n *= 1e-250;
            f_m *= 1e-250;
        }
    }
    let scale = (cur * f_m + prev * f_m1) / (f_m * f_m + f_m1 * f_m1);
    f_n * scale
}

/// J_n'(x).
pub fn bessel_j_prime(n: usize, x: f64) -> f64 {
    if n == 0 {
        -bessel_j(1, x)
    } else {
        0.5 * (bessel_j(n - 1, x) - bessel_j(n + 1, x))
    }
}

/// Bisection of a sign change of `f` on [a, b] to 1e-12 relative width.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> Option<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if (b - a) <= 1e-13 * mid.abs().max(1.0) {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Some(0.5 * (a + b))
}

/// Lazily extended table of Bessel zeros j_{nu,k}, bracketed by interlacing:
/// j_{0,k} in ((k − 1/2)π, kπ) and j_{nu,k} in (j_{nu−1,k}, j_{nu−1,k+1}).
#[derive(Debug, Default, Clone)]
pub struct BesselZeros {
    table: Vec<Vec<f64>>,
}

impl BesselZeros {
    pub fn new() -> Self {
        Self::default()
    }

    /// Make sure the first `len` zeros of J_nu are known.
    pub fn ensure_len(&mut self, nu: usize, len: usize) -> Result<(), SpecialError> {
        while self.table.len() <= nu {
            self.table.push(Vec::new());
        }
        while self.table[nu].len() < len {
            let k = self.table[nu].len() + 1;
            let (a, b) = if nu == 0 {
                ((k as f64 - 0.5) * PI, k as f64 * PI)
            } else {
                self.ensure_len(nu - 1, k + 1)?;
                (self.table[nu - 1][k - 1], self.table[nu - 1][k])
            };
            let z = bisect(|x| bessel_j(nu, x), a, b).ok_or(SpecialError::Bracket { nu, k })?;
            self.table[nu].push(z);
        }
        Ok(())
    }

    /// Extend until the last known zero of J_nu is at least `bound`.
    pub fn ensure_beyond(&mut self, nu: usize, bound: f64) -> Result<&[f64], SpecialError> {
        self.ensure_len(nu, 1)?;
        while *self.table[nu].last().unwrap() < bound {
            let len = self.table[nu].len();
            self.ensure_len(nu, len + 1)?;
        }
        Ok(&self.table[nu])
    }

    /// j_{nu,k}, k >= 1.
    pub fn zero(&mut self, nu: usize, k: usize) -> Result<f64, SpecialError> {
        if k == 0 {
            return Err(SpecialError::Bracket { nu, k });
        }
        self.ensure_len(nu, k)?;
        Ok(self.table[nu][k - 1])
    }
}

/// The k-th positive zero of J_nu (k >= 1).
pub fn bessel_zero(nu: usize, k: usize) -> Result<f64, SpecialError> {
    BesselZeros::new().zero(nu, k)
}

/// Zeros of J_nu' (nu >= 1) lying between consecutive J_nu zeros (first one in (nu, j_{nu,1})).
pub fn bessel_prime_zeros(nu: usize, jzeros: &[f64], zmax: f64) -> Result<Vec<f64>, SpecialError> {
    let mut out = Vec::new();
    let mut a = nu as f64;
    for (k, &b) in jzeros.iter().enumerate() {
        if a >= zmax {
            break;
        }
        let z = bisect(|x| bessel_j_prime(nu, x), a, b).ok_or(SpecialError::Bracket { nu, k: k + 1 })?;
        if z < zmax {
            out.push(z);
        }
        a = b;
    }
    Ok(out)
}
