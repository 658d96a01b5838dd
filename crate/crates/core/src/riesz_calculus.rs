//! Fractional Riesz lifts φ^{(κ)}(Λ) = Γ(κ)⁻¹ ∫₀^Λ (Λ−μ)^{κ−1} φ(μ) dμ of sampled
//! functions, the semigroup law, the Aizenman–Lieb identity and the
//! log-convexity (interpolation) certificate.
//!
//! Lifts integrate the interpolant against the kernel in closed form per cell, so
//! the integrable kernel singularity for κ < 1 never meets a quadrature node.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quad::{graded, integrate_right_weighted, Rule};
use crate::special::gamma;
use crate::spectra::{riesz_mean, SpectraError, Spectrum};

#[derive(Debug, Error)]
pub enum RieszError {
    #[error("kappa must be positive, got {0}")]
    NonPositiveKappa(f64),
    #[error("need 0 < sigma < gamma, got sigma = {sigma}, gamma = {gamma}")]
    BadOrders { sigma: f64, gamma: f64 },
    #[error("invalid sampled function: {0}")]
    InvalidSamples(String),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    /// Value `values[i]` on [grid[i], grid[i+1]).
    PiecewiseConstantLeft,
    PiecewiseLinear,
}

/// Samples of a function on [0, λ_max] with an interpolation rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledFunction {
    grid: Vec<f64>,
    values: Vec<f64>,
    interpolation: Interpolation,
}

impl SampledFunction {
    pub fn new(grid: Vec<f64>, values: Vec<f64>, interpolation: Interpolation) -> Result<Self, RieszError> {
        if grid.len() < 2 || grid.len() != values.len() {
            return Err(RieszError::InvalidSamples(format!(
                "need matching grid/values of length >= 2 (got {} and {})",
                grid.len(),
                values.len()
            )));
        }
        if grid[0] != 0.0 {
            return Err(RieszError::InvalidSamples("grid must start at 0".into()));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) || !grid.last().unwrap().is_finite() {
            return Err(RieszError::InvalidSamples("grid must be strictly increasing and finite".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(RieszError::InvalidSamples("values must be finite".into()));
        }
        Ok(SampledFunction { grid, values, interpolation })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(grid: Vec<f64>, f: F, interpolation: Interpolation) -> Result<Self, RieszError> {
        let values = grid.iter().map(|&x| f(x)).collect();
        Self::new(grid, values, interpolation)
    }

    /// Uniform grid of n points on [0, lambda_max].
    pub fn uniform_grid(lambda_max: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lambda_max * i as f64 / (n - 1) as f64).collect()
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    /// Interpolated value at x in [0, λ_max].
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.grid.len();
        if x >= self.grid[n - 1] {
            return self.values[n - 1];
        }
        let i = self.grid.partition_point(|&g| g <= x).saturating_sub(1);
        match self.interpolation {
            Interpolation::PiecewiseConstantLeft => self.values[i],
            Interpolation::PiecewiseLinear => {
                let t = (x - self.grid[i]) / (self.grid[i + 1] - self.grid[i]);
                self.values[i] + t * (self.values[i + 1] - self.values[i])
            }
        }
    }

    /// sup |f| over [0, λ_max] (attained at samples for both interpolations).
    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Pointwise a·self + b·other on a shared grid.
    pub fn combine(&self, a: f64, other: &SampledFunction, b: f64) -> Result<Self, RieszError> {
        if self.grid != other.grid || self.interpolation != other.interpolation {
            return Err(RieszError::InvalidSamples("grids or interpolations differ".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Self::new(self.grid.clone(), values, self.interpolation)
    }

    /// Pieces [a, b] with f(μ) = c0 + slope (μ − a); equal neighbors merged.
    fn pieces(&self) -> Vec<Piece> {
        let mut out: Vec<Piece> = Vec::new();
        for i in 0..self.grid.len() - 1 {
            let (a, b) = (self.grid[i], self.grid[i + 1]);
            let (c0, slope) = match self.interpolation {
                Interpolation::PiecewiseConstantLeft => (self.values[i], 0.0),
                Interpolation::PiecewiseLinear => (self.values[i], (self.values[i + 1] - self.values[i]) / (b - a)),
            };
            if let Some(last) = out.last_mut() {
                let end = last.c0 + last.slope * (last.b - last.a);
                let tol = 1e-14 * (1.0 + c0.abs() + slope.abs() * (b - a));
                if (end - c0).abs() <= tol && (last.slope - slope).abs() * (b - last.a) <= tol {
                    last.b = b;
                    continue;
                }
            }
            out.push(Piece { a, b, c0, slope });
        }
        out
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), RieszError> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["lambda", "value"])?;
        for (x, v) in self.grid.iter().zip(&self.values) {
            wr.write_record([format!("{x:.16e}"), format!("{v:.16e}")])?;
        }
        wr.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R, interpolation: Interpolation) -> Result<Self, RieszError> {
        let mut rd = csv::Reader::from_reader(r);
        let headers = rd.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "lambda" || &headers[1] != "value" {
            return Err(RieszError::InvalidSamples("expected header 'lambda,value'".into()));
        }
        let mut grid = Vec::new();
        let mut values = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| RieszError::InvalidSamples(e.to_string()));
            grid.push(parse(&rec[0])?);
            values.push(parse(&rec[1])?);
        }
        Self::new(grid, values, interpolation)
    }
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    c0: f64,
    slope: f64,
}

/// ∫_r^1 t^{κ−1}(1 − t) dt, computed without cancellation for r near 1.
fn beta_tail(r: f64, kappa: f64) -> f64 {
    if r <= 0.0 {
        return 1.0 / kappa - 1.0 / (kappa + 1.0);
    }
    if r < 0.9 {
        let lr = r.ln();
        -(kappa * lr).exp_m1() / kappa + ((kappa + 1.0) * lr).exp_m1() / (kappa + 1.0)
    } else {
        // smooth integrand on [0.9, 1]: 8-point Gauss–Legendre is exact to rounding
        const X: [f64; 4] = [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_3];
        const W: [f64; 4] = [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_5, 0.101_228_536_290_376_3];
        let c = 0.5 * (1.0 + r);
        let h = 0.5 * (1.0 - r);
        let g = |t: f64| t.powf(kappa - 1.0) * (1.0 - t);
        let mut s = 0.0;
        for (x, w) in X.iter().zip(W) {
            s += w * (g(c - h * x) + g(c + h * x));
        }
        s * h
    }
}

/// Exact evaluation of the lift of a piecewise-polynomial interpolant at any Λ.
#[derive(Debug, Clone)]
pub struct LiftEvaluator {
    pieces: Vec<Piece>,
    kappa: f64,
    inv_gamma: f64,
}

impl LiftEvaluator {
    pub fn new(f: &SampledFunction, kappa: f64) -> Result<Self, RieszError> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(RieszError::NonPositiveKappa(kappa));
        }
        Ok(LiftEvaluator { pieces: f.pieces(), kappa, inv_gamma: 1.0 / gamma(kappa) })
    }

    /// Piece boundaries (knots) of the underlying interpolant.
    pub fn knots(&self) -> Vec<f64> {
        let mut k: Vec<f64> = self.pieces.iter().map(|p| p.a).collect();
        if let Some(p) = self.pieces.last() {
            k.push(p.b);
        }
        k
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        let k = self.kappa;
        let mut s = 0.0;
        for p in &self.pieces {
            if p.a >= lambda {
                break;
            }
            let big = lambda - p.a;
            let small = (lambda - p.b).max(0.0);
            let r = small / big;
            let i0 = if small == 0.0 { big.powf(k) / k } else { -big.powf(k) * (k * r.ln()).exp_m1() / k };
            let mut cell = p.c0 * i0;
            if p.slope != 0.0 {
                cell += p.slope * big.powf(k + 1.0) * beta_tail(r, k);
            }
            s += cell;
        }
        s * self.inv_gamma
    }
}

/// φ^{(κ)} sampled on the grid of φ (returned with linear interpolation).
pub fn riesz_lift(f: &SampledFunction, kappa: f64) -> Result<SampledFunction, RieszError> {
    let ev = LiftEvaluator::new(f, kappa)?;
    let values: Vec<f64> = f.grid.par_iter().map(|&l| ev.eval(l)).collect();
    SampledFunction::new(f.grid.clone(), values, Interpolation::PiecewiseLinear)
}

/// Outer lift of order κ₂ applied to the exact inner lift `inner`, by quadrature
/// split at the knots: graded Gauss–Legendre toward each knot, Gauss–Jacobi for
/// the kernel singularity at Λ.
fn outer_lift_by_quadrature(inner: &LiftEvaluator, kappa2: f64, lambda: f64, gl: &Rule, gj: &Rule) -> f64 {
    let mut knots: Vec<f64> = inner.knots().into_iter().filter(|&k| k < lambda).collect();
    knots.push(lambda);
    let kernel = |mu: f64| (lambda - mu).powf(kappa2 - 1.0) * inner.eval(mu);
    let mut s = 0.0;
    let last = knots.len() - 2;
    for (i, w) in knots.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        if i == last {
            let m = 0.5 * (a + b);
            s += graded(gl, kernel, a, m, true, false, 24);
            s += integrate_right_weighted(gj, kappa2 - 1.0, |mu| inner.eval(mu), m, b);
        } else {
            let near_right = lambda - b < b - a;
            s += graded(gl, kernel, a, b, true, near_right, 24);
        }
    }
    s / gamma(kappa2)
}

/// sup over the grid of |(f^{(κ₁)})^{(κ₂)} − f^{(κ₁+κ₂)}|. The inner lift is
/// exact, the outer one an independent quadrature, the right side closed form.
pub fn semigroup_check(f: &SampledFunction, kappa1: f64, kappa2: f64) -> Result<f64, RieszError> {
    let inner = LiftEvaluator::new(f, kappa1)?;
    if !(kappa2 > 0.0) {
        return Err(RieszError::NonPositiveKappa(kappa2));
    }
    let direct = LiftEvaluator::new(f, kappa1 + kappa2)?;
    let gl = Rule::gauss_legendre(12);
    let gj = Rule::gauss_jacobi(24, kappa2 - 1.0, 0.0);
    Ok(f.grid[1..]
        .par_iter()
        .map(|&l| (outer_lift_by_quadrature(&inner, kappa2, l, &gl, &gj) - direct.eval(l)).abs())
        .reduce(|| 0.0, f64::max))
}

/// Outcome of the interpolation inequality check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpolationCertificate {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub constant: f64,
}

/// Constant of the interpolation inequality: 4e^{1/(2e)} for γ <= 1, times
/// 4^{N²/4} with N = max(2, ⌈2γ⌉) for γ > 1.
pub fn interpolation_constant(gamma: f64) -> f64 {
    let base = 4.0 * (1.0 / (2.0 * std::f64::consts::E)).exp();
    if gamma <= 1.0 {
        base
    } else {
        let n = (2.0 * gamma).ceil().max(2.0);
        4f64.powf(n * n / 4.0) * base
    }
}

/// Sup over the grid refined `refine`-fold (lifts can peak between samples).
fn sup_lift(ev: &LiftEvaluator, grid: &[f64], refine: usize) -> f64 {
    grid.par_windows(2)
        .map(|w| {
            (0..refine)
                .map(|j| ev.eval(w[0] + (w[1] - w[0]) * (j as f64 + 1.0) / refine as f64).abs())
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

/// lhs = sup|f^{(σ)}|, rhs = C (sup|f|)^{1−σ/γ} (sup|f^{(γ)}|)^{σ/γ}, ratio = lhs/rhs.
pub fn riesz_interpolation_certificate(
    f: &SampledFunction,
    sigma: f64,
    gamma_order: f64,
) -> Result<InterpolationCertificate, RieszError> {
    if !(sigma > 0.0 && sigma < gamma_order) {
        return Err(RieszError::BadOrders { sigma, gamma: gamma_order });
    }
    let refine = 4;
    let lhs = sup_lift(&LiftEvaluator::new(f, sigma)?, &f.grid, refine);
    let phi0 = f.sup_abs();
    let phig = sup_lift(&LiftEvaluator::new(f, gamma_order)?, &f.grid, refine);
    let constant = interpolation_constant(gamma_order);
    let t = sigma / gamma_order;
    let rhs = constant * phi0.powf(1.0 - t) * phig.powf(t);
    let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs };
    Ok(InterpolationCertificate { lhs, rhs, ratio, constant })
}

/// Both sides of R_γ(λ) = γ(γ−1) ∫₀^λ τ^{γ−2} R₁(λ−τ) dτ for γ > 1, with R₁ the
/// order-one Riesz mean of the spectrum (the integrand vanishes for τ >= λ).
pub fn aizenman_lieb_check(spec: &Spectrum, gamma_order: f64, lambda: f64) -> Result<(f64, f64), RieszError> {
    if !(gamma_order > 1.0) {
        return Err(RieszError::BadOrders { sigma: 1.0, gamma: gamma_order });
    }
    let lhs = riesz_mean(spec, lambda, gamma_order)?;
    let ev = spec.below(lambda)?;
    if ev.is_empty() {
        return Ok((lhs, 0.0));
    }
    // prefix sums make R₁(s) = N(s) s − Σ_{λ_n<s} λ_n an O(log n) lookup
    let mut prefix = Vec::with_capacity(ev.len() + 1);
    prefix.push(0.0);
    for &e in ev {
        prefix.push(prefix.last().unwrap() + e);
    }
    let r1 = |s: f64| {
        let k = ev.partition_point(|&e| e < s);
        k as f64 * s - prefix[k]
    };
    // kinks of τ ↦ R₁(λ − τ) at τ = λ − λ_n; beyond λ − λ₁ the integrand vanishes
    let mut kinks: Vec<f64> = ev.iter().map(|&e| lambda - e).collect();
    kinks.sort_by(f64::total_cmp);
    kinks.dedup();
    let gl = Rule::gauss_legendre(16);
    // first piece: Gauss–Jacobi for the weight τ^{γ−2} at 0 (R₁(λ−τ) is linear there)
    let gj = Rule::gauss_jacobi(16, 0.0, gamma_order - 2.0);
    let t0 = kinks[0];
    let h = 0.5 * t0;
    let mut integral = 0.0;
    for (x, w) in gj.nodes.iter().zip(&gj.weights) {
        integral += w * r1(lambda - (h * (1.0 + x)));
    }
    integral *= h.powf(gamma_order - 1.0);
    for w in kinks.windows(2) {
        integral += gl.integrate(|t| t.powf(gamma_order - 2.0) * r1(lambda - t), w[0], w[1]);
    }
    Ok((lhs, gamma_order * (gamma_order - 1.0) * integral))
}
