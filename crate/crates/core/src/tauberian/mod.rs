//! Band-limited mollifiers, the φ_{k,ε} hierarchy with its b_m coefficients and
//! ψ_k majorants, smoothed Riesz means of odd distribution functions, the
//! iterated integration-by-parts identity, and empirical order checks of the
//! Laplace–Tauberian bound for pointwise spectral functions.
//!
//! Measures are given on [0, ∞) and extended evenly, so that N_μ is odd; a
//! spectral measure enters through τ = √λ.

mod order;
mod panel;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quad::{adaptive, QuadError, Rule};
use crate::special::gamma;
use crate::spectra::SpectraError;

pub use order::{heat_kernel_diagonal, tauberian_order_check, LaplaceCheck, OrderCheck, OrderPoint, MIN_DECADES};
pub use panel::{PanelFunction, PanelGrid};

/// Largest hierarchy depth that the tabulation supports.
pub const MAX_DEPTH: usize = 8;

#[derive(Debug, Error)]
pub enum TauberianError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("phi_{k} is not resolved by the tabulation: {detail}")]
    TabulationUnstable { k: usize, detail: String },
    #[error("quadrature: {0}")]
    Quadrature(#[from] QuadError),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
    #[error("lambda range spans {decades:.2} decades; at least {required} needed")]
    InsufficientRange { decades: f64, required: f64 },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MollifierKind {
    /// φ = |ψ|² with ψ̂ a smooth bump on [−1/2, 1/2].
    BumpSquared,
}

/// The standard bump e^{−1/(1−s²)} on (−1, 1).
fn bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

/// Nodes/weights on [0, 1], uniform (about one cosine period per panel at the
/// largest tabulated τ) then halving toward 1 where the bump flattens out.
fn bump_rule() -> (Vec<f64>, Vec<f64>) {
    let gl = Rule::gauss_legendre(24);
    let mut breaks: Vec<f64> = (0..=127).map(|i| i as f64 / 128.0).collect();
    let mut gap = 1.0 / 128.0;
    for _ in 0..10 {
        gap *= 0.5;
        breaks.push(1.0 - gap);
    }
    breaks.push(1.0);
    let mut xs = Vec::new();
    let mut ws = Vec::new();
    for w in breaks.windows(2) {
        let (c, h) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
        for (x, wt) in gl.nodes.iter().zip(&gl.weights) {
            xs.push(c + h * x);
            ws.push(h * wt);
        }
    }
    (xs, ws)
}

/// A mollifier pair (φ, χ): φ >= 0 even with ∫φ = 1 and φ̂ supported in [−1, 1];
/// χ >= 0 even with ∫χ = 1 supported in [−1, 1].
#[derive(Debug, Clone)]
pub struct MollifierFamily {
    kind: MollifierKind,
    t_max: f64,
    panel_width: f64,
    nodes_per_panel: usize,
    u_nodes: Vec<f64>,
    /// quadrature weight times the bump at each node
    u_wb: Vec<f64>,
    phi_norm: f64,
    chi_norm: f64,
}

/// Numerical invariants of a family (see `MollifierFamily::invariants`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MollifierInvariants {
    pub phi_integral: f64,
    pub chi_integral: f64,
    pub max_evenness_defect: f64,
    /// max |φ̂(ξ)| over sampled |ξ| in (1, 3]
    pub max_phi_hat_outside: f64,
}

pub fn build_mollifier(kind: MollifierKind) -> MollifierFamily {
    let (u_nodes, ws) = bump_rule();
    let u_wb: Vec<f64> = u_nodes.iter().zip(&ws).map(|(&u, &w)| w * bump(u)).collect();
    // ∫|ψ̂|² = ∫_{−1/2}^{1/2} b(ξ)² dξ = ∫_0^1 b(u)² du with u = 2ξ
    let phi_norm: f64 = u_nodes.iter().zip(&ws).map(|(&u, &w)| w * bump(u).powi(2)).sum();
    let chi_norm: f64 = 2.0 * u_wb.iter().sum::<f64>();
    MollifierFamily { kind, t_max: 200.0, panel_width: 0.5, nodes_per_panel: 20, u_nodes, u_wb, phi_norm, chi_norm }
}

impl MollifierFamily {
    pub fn kind(&self) -> MollifierKind {
        self.kind
    }
    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    /// ψ(x) = ∫ b(ξ) cos(2πxξ) dξ, the inverse transform of the bump b(ξ) = e^{−1/(1−4ξ²)}.
    fn psi(&self, x: f64) -> f64 {
        let w = std::f64::consts::PI * x;
        self.u_nodes.iter().zip(&self.u_wb).map(|(&u, &wb)| wb * (w * u).cos()).sum()
    }

    pub fn phi(&self, x: f64) -> f64 {
        self.psi(x).powi(2) / self.phi_norm
    }

    pub fn chi(&self, s: f64) -> f64 {
        bump(s) / self.chi_norm
    }

    pub fn chi_eps(&self, eps: f64, t: f64) -> f64 {
        self.chi(t / eps) / eps
    }

    /// Symmetric panel layout on [−T, T]: fine panels on [−10, 10], unit panels
    /// in the tails (φ has frequencies below 1), graded panels inside [−ε, ε].
    pub fn layout(&self, eps: f64) -> Arc<PanelGrid> {
        let t = self.t_max;
        let inner = 10.0;
        let ni = (2.0 * inner / self.panel_width).round() as usize;
        let mut breaks: Vec<f64> = (0..=ni).map(|i| -inner + 2.0 * inner * i as f64 / ni as f64).collect();
        let nt = (t - inner).round() as usize;
        for i in 1..=nt {
            let x = inner + (t - inner) * i as f64 / nt as f64;
            breaks.push(x);
            breaks.push(-x);
        }
        let mut gap = 1.0;
        for _ in 0..=10 {
            let s = eps * (1.0 - gap);
            breaks.push(s);
            breaks.push(-s);
            gap *= 0.5;
        }
        breaks.push(eps);
        breaks.push(-eps);
        for &s in &[0.25, 0.5, 0.75] {
            breaks.push(s * eps);
            breaks.push(-s * eps);
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * t);
        PanelGrid::new(breaks, self.nodes_per_panel)
    }

    /// Layout covering only [−ε, ε], enough to tabulate χ_ε and its cumulative.
    fn chi_layout(&self, eps: f64) -> Arc<PanelGrid> {
        let mut breaks = vec![0.0, eps, -eps];
        let mut gap = 0.5;
        for _ in 0..10 {
            breaks.push(eps * (1.0 - gap));
            breaks.push(-eps * (1.0 - gap));
            gap *= 0.5;
        }
        breaks.sort_by(f64::total_cmp);
        PanelGrid::new(breaks, self.nodes_per_panel)
    }

    /// ∫ φ(τ) cos(2πξτ) dτ by panel quadrature of the tabulated φ.
    pub fn phi_hat(&self, xi: f64) -> f64 {
        let g = self.layout(1.0);
        let f = PanelFunction::from_fn(&g, |x| self.phi(x) * (2.0 * std::f64::consts::PI * xi * x).cos());
        f.integral()
    }

    pub fn invariants(&self) -> MollifierInvariants {
        let g = self.layout(1.0);
        let phi = PanelFunction::from_fn(&g, |x| self.phi(x));
        let chi = PanelFunction::from_fn(&g, |x| self.chi(x));
        let max_evenness_defect = g
            .nodes()
            .iter()
            .map(|&x| (self.phi(x) - self.phi(-x)).abs().max((self.chi(x) - self.chi(-x)).abs()))
            .fold(0.0, f64::max);
        let max_phi_hat_outside =
            [1.05, 1.25, 1.5, 2.0, 2.5, 3.0].iter().map(|&xi| self.phi_hat(xi).abs()).fold(0.0, f64::max);
        MollifierInvariants { phi_integral: phi.integral(), chi_integral: chi.integral(), max_evenness_defect, max_phi_hat_outside }
    }
}

/// φ_{k,ε} for k = 0..=K with cumulatives, integrals, b_m and majorants ψ_k.
#[derive(Debug, Clone)]
pub struct PhiHierarchy {
    eps: f64,
    k_max: usize,
    grid: Arc<PanelGrid>,
    chi: PanelFunction,
    chi_cum: PanelFunction,
    phi: Vec<PanelFunction>,
    phi_cum: Vec<PanelFunction>,
    integrals: Vec<f64>,
    b: Vec<f64>,
    /// psi[k + 1] = ψ_k for k = −1..=K
    psi: Vec<PanelFunction>,
}

pub fn build_phi_hierarchy(fam: &MollifierFamily, eps: f64, k_max: usize) -> Result<PhiHierarchy, TauberianError> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(TauberianError::InvalidArgument(format!("eps must lie in (0, 1], got {eps}")));
    }
    if k_max > MAX_DEPTH {
        return Err(TauberianError::TabulationUnstable {
            k: k_max,
            detail: format!("depth {k_max} exceeds {MAX_DEPTH}; polynomial tail growth defeats the truncation at ±{}", fam.t_max),
        });
    }
    let grid = fam.layout(eps);
    let chi = PanelFunction::from_fn(&grid, |x| fam.chi_eps(eps, x));
    let chi_cum = chi.cumulative();
    let phi0 = PanelFunction::from_fn(&grid, |x| fam.phi(x));
    let mut phi = vec![phi0];
    let mut integrals = vec![phi[0].integral()];
    for k in 1..=k_max {
        let prev = &phi[k - 1];
        let next = prev.combine(1.0, &chi, -integrals[k - 1]).balanced_antiderivative();
        // Schwartz decay: the tabulated antiderivative must return to ~0 at +T
        let scale = next.sup_abs().max(1.0);
        let end = next.values().last().copied().unwrap_or(0.0);
        if end.abs() > 1e-9 * scale {
            return Err(TauberianError::TabulationUnstable {
                k,
                detail: format!("phi_{k}(T) = {end:e} does not vanish (sup {scale:e})"),
            });
        }
        integrals.push(next.integral());
        phi.push(next);
    }
    let phi_cum = phi.iter().map(|p| p.cumulative()).collect();
    let b = b_recursion(&integrals, k_max);
    // ψ_{−1} = ψ_0 = φ; ψ_k(τ) = ∫_τ^∞ σψ_{k−2}(σ)dσ = −G(−|τ|) with G the left
    // cumulative of the odd integrand, which keeps the tails accurate
    let mut psi = vec![phi[0].clone(), phi[0].clone()];
    for k in 1..=k_max {
        let g = psi[k - 1].map(|x, v| if x.is_finite() { x * v } else { 0.0 }).cumulative();
        psi.push(PanelFunction::from_fn(&grid, |x| -g.eval(-x.abs())));
    }
    Ok(PhiHierarchy { eps, k_max, grid, chi, chi_cum, phi, phi_cum, integrals, b, psi })
}

/// b_0 = 1, b_m = (−1)^{m−1} Σ_{j even < m} b_j ∫φ_{m−j}; odd m are set to 0.
fn b_recursion(integrals: &[f64], k_max: usize) -> Vec<f64> {
    let mut b = vec![0.0; k_max + 1];
    b[0] = 1.0;
    for m in (2..=k_max).step_by(2) {
        let s: f64 = (0..m).step_by(2).map(|j| b[j] * integrals[m - j]).sum();
        b[m] = -s; // (−1)^{m−1} = −1 for even m
    }
    b
}

fn compositions(m: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if m == 0 {
        out.push(prefix.clone());
        return;
    }
    for k in 1..=m {
        prefix.push(k);
        compositions(m - k, prefix, out);
        prefix.pop();
    }
}

impl PhiHierarchy {
    pub fn eps(&self) -> f64 {
        self.eps
    }
    pub fn depth(&self) -> usize {
        self.k_max
    }
    pub fn grid(&self) -> &Arc<PanelGrid> {
        &self.grid
    }
    pub fn phi(&self, k: usize) -> &PanelFunction {
        &self.phi[k]
    }
    pub fn chi(&self) -> &PanelFunction {
        &self.chi
    }
    /// ψ_k for k >= −1.
    pub fn psi(&self, k: isize) -> &PanelFunction {
        &self.psi[(k + 1) as usize]
    }
    /// ∫ φ_{k,ε}.
    pub fn integral(&self, k: usize) -> f64 {
        self.integrals[k]
    }

    /// b_m from the recursion; exactly 0 for odd m.
    pub fn b(&self, m: usize) -> f64 {
        self.b[m]
    }

    pub fn b_table(&self) -> Vec<f64> {
        self.b.clone()
    }

    /// b_m as a signed sum over compositions of m, Π ∫φ_{k_i} over the parts.
    pub fn b_closed_form(&self, m: usize) -> f64 {
        if m == 0 {
            return 1.0;
        }
        let mut all = Vec::new();
        compositions(m, &mut Vec::new(), &mut all);
        all.iter()
            .map(|c| {
                let sign = if c.len() % 2 == 0 { 1.0 } else { -1.0 };
                sign * c.iter().map(|&k| self.integrals[k]).product::<f64>()
            })
            .sum()
    }

    /// max over nodes of |φ_k(τ) − (−1)^k φ_k(−τ)|.
    pub fn parity_defect(&self, k: usize) -> f64 {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let f = &self.phi[k];
        self.grid.nodes().iter().map(|&x| (f.eval(x) - sign * f.eval(-x)).abs()).fold(0.0, f64::max)
    }

    /// (φ_{k,ε} * N_μ)(σ) for an evenly extended atomic measure.
    fn conv_n(&self, k: usize, mu: &AtomicMeasure, s: f64) -> f64 {
        let (c, total) = (&self.phi_cum[k], self.integrals[k]);
        mu.atoms.iter().map(|&(x, w)| w * (c.eval(s - x) + c.eval(s + x) - total)).sum()
    }

    /// (φ_{k,ε} * T_μ)(σ).
    fn conv_t(&self, k: usize, mu: &AtomicMeasure, s: f64) -> f64 {
        let f = &self.phi[k];
        mu.atoms.iter().map(|&(x, w)| w * (f.eval(s - x) + f.eval(s + x))).sum()
    }

    fn chi_conv_n(&self, mu: &AtomicMeasure, s: f64) -> f64 {
        mu.atoms.iter().map(|&(x, w)| w * (self.chi_cum.eval(s - x) + self.chi_cum.eval(s + x) - 1.0)).sum()
    }
}

/// One row of `majorant_check`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MajorantRow {
    pub k: usize,
    /// sup |φ_{k,ε}|/ψ_k over nodes where ψ_k is above the cutoff
    pub sup_ratio: f64,
    pub min_psi: f64,
    /// nodes with |τ| beyond this were omitted (ψ_k below 1e−12 ψ_k(0)); None if none omitted
    pub cutoff_tau: Option<f64>,
}

pub fn majorant_check(h: &PhiHierarchy) -> Vec<MajorantRow> {
    let nodes = h.grid.nodes();
    (0..=h.k_max)
        .map(|k| {
            let psi = h.psi(k as isize);
            let floor = 1e-12 * psi.eval(0.0);
            let mut sup_ratio: f64 = 0.0;
            let mut min_psi = f64::INFINITY;
            let mut cutoff: Option<f64> = None;
            for (i, &x) in nodes.iter().enumerate() {
                let p = psi.values()[i];
                if p < floor {
                    cutoff = Some(cutoff.map_or(x.abs(), |c: f64| c.min(x.abs())));
                    continue;
                }
                min_psi = min_psi.min(p);
                sup_ratio = sup_ratio.max(h.phi[k].values()[i].abs() / p);
            }
            MajorantRow { k, sup_ratio, min_psi, cutoff_tau: cutoff }
        })
        .collect()
}

/// A measure on [0, ∞) given by atoms (location, weight) and a background
/// Σ ν_i K_i u^{ν_i−1} du, with the compensating mass K₀δ₀.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicMeasure {
    atoms: Vec<(f64, f64)>,
    polynomial_part: Vec<(f64, f64)>,
    k0: f64,
}

impl AtomicMeasure {
    /// `atoms`: (location >= 0, weight); `polynomial_part`: (K_i >= 0, ν_i > 0).
    pub fn new(atoms: Vec<(f64, f64)>, polynomial_part: Vec<(f64, f64)>, k0: f64) -> Result<Self, TauberianError> {
        if atoms.iter().any(|&(x, w)| !(x >= 0.0 && x.is_finite() && w.is_finite())) {
            return Err(TauberianError::InvalidArgument("atoms need finite locations >= 0 and finite weights".into()));
        }
        if polynomial_part.iter().any(|&(k, nu)| !(k >= 0.0 && k.is_finite() && nu > 0.0 && nu.is_finite())) {
            return Err(TauberianError::InvalidArgument("background densities need K_i >= 0 and nu_i > 0".into()));
        }
        if !(k0 >= 0.0 && k0.is_finite()) {
            return Err(TauberianError::InvalidArgument(format!("K_0 must be >= 0, got {k0}")));
        }
        let mut atoms = atoms;
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(AtomicMeasure { atoms, polynomial_part, k0 })
    }

    pub fn atoms_only(atoms: Vec<(f64, f64)>) -> Result<Self, TauberianError> {
        Self::new(atoms, Vec::new(), 0.0)
    }

    pub fn zero() -> Self {
        AtomicMeasure { atoms: Vec::new(), polynomial_part: Vec::new(), k0: 0.0 }
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }
    pub fn polynomial_part(&self) -> &[(f64, f64)] {
        &self.polynomial_part
    }
    pub fn k0(&self) -> f64 {
        self.k0
    }

    /// μ + K₀δ₀ + Σ ν_iK_i u^{ν_i−1}du >= 0: the densities are nonnegative, so
    /// only the atoms (merged by location, K₀ added at 0) can fail.
    pub fn augmented_nonnegative(&self) -> bool {
        let mut i = 0;
        while i < self.atoms.len() {
            let x = self.atoms[i].0;
            let mut w = 0.0;
            while i < self.atoms.len() && self.atoms[i].0 == x {
                w += self.atoms[i].1;
                i += 1;
            }
            if x == 0.0 {
                w += self.k0;
            }
            if w < 0.0 {
                return false;
            }
        }
        true
    }

    pub fn distribution(&self) -> OddDistributionFunction<'_> {
        OddDistributionFunction { mu: self }
    }

    fn check_atomic(&self) -> Result<(), TauberianError> {
        if !self.polynomial_part.is_empty() {
            return Err(TauberianError::InvalidArgument("identity checks need a purely atomic measure".into()));
        }
        Ok(())
    }
}

/// The odd, midpoint-regularized distribution function N_μ of the even extension.
#[derive(Debug, Clone, Copy)]
pub struct OddDistributionFunction<'a> {
    mu: &'a AtomicMeasure,
}

impl OddDistributionFunction<'_> {
    pub fn eval(&self, tau: f64) -> f64 {
        if tau == 0.0 {
            return 0.0;
        }
        let t = tau.abs();
        let mut s = 0.0;
        for &(x, w) in &self.mu.atoms {
            if x < t {
                s += w;
            } else if x == t {
                s += 0.5 * w;
            } else {
                break;
            }
        }
        for &(k, nu) in &self.mu.polynomial_part {
            s += k * t.powf(nu);
        }
        tau.signum() * s
    }
}

/// (χ_ε * N_μ)(σ), using a tabulated cumulative of χ_ε for atoms and
/// quadrature against χ_ε for the background densities.
struct SmoothedN<'a> {
    mu: &'a AtomicMeasure,
    eps: f64,
    chi: PanelFunction,
    chi_cum: PanelFunction,
}

impl SmoothedN<'_> {
    fn eval(&self, s: f64) -> f64 {
        let mut v: f64 =
            self.mu.atoms.iter().map(|&(x, w)| w * (self.chi_cum.eval(s - x) + self.chi_cum.eval(s + x) - 1.0)).sum();
        if !self.mu.polynomial_part.is_empty() {
            let p = |y: f64| -> f64 {
                let t = y.abs();
                y.signum() * self.mu.polynomial_part.iter().map(|&(k, nu)| k * t.powf(nu)).sum::<f64>()
            };
            // ∫χ_ε(r) P(s − r) dr, split where the argument of P crosses 0
            let g = self.chi.grid().clone();
            let rule = Rule::gauss_legendre(20);
            let mut breaks: Vec<f64> = g.breaks().to_vec();
            if s.abs() < self.eps {
                breaks.push(s);
                breaks.sort_by(f64::total_cmp);
            }
            for w in breaks.windows(2) {
                v += crate::quad::graded(&rule, |r| self.chi.eval(r) * p(s - r), w[0], w[1], w[0] == s, w[1] == s, 30);
            }
        }
        v
    }
}

fn g_gamma(gamma_order: f64, x: f64) -> f64 {
    (1.0 - x * x).powf(gamma_order - 1.0) * x
}

/// R_{μ,ε}^γ(τ) = (2γ/τ)∫₀^τ (1−σ²/τ²)^{γ−1}(σ/τ)(χ_ε*N_μ)(σ)dσ; ε = 0 gives the
/// unsmoothed R_μ^γ(τ) = ∫_{[0,τ]}(1−σ²/τ²)^γ dμ in closed form.
pub fn smoothed_riesz(
    mu: &AtomicMeasure,
    gamma_order: f64,
    tau: f64,
    eps: f64,
    fam: &MollifierFamily,
) -> Result<f64, TauberianError> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(TauberianError::InvalidArgument(format!("tau must be positive, got {tau}")));
    }
    if !(gamma_order > 0.0) {
        return Err(TauberianError::InvalidArgument(format!("gamma must be positive, got {gamma_order}")));
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(TauberianError::InvalidArgument(format!("eps must lie in [0, 1], got {eps}")));
    }
    if eps == 0.0 {
        let mut s: f64 = mu.atoms.iter().filter(|a| a.0 < tau).map(|&(x, w)| w * (1.0 - (x / tau).powi(2)).powf(gamma_order)).sum();
        // ∫₀^τ (1−σ²/τ²)^γ νKσ^{ν−1}dσ = Kτ^ν (ν/2) B(ν/2, γ+1)
        for &(k, nu) in &mu.polynomial_part {
            let beta = gamma(nu / 2.0) * gamma(gamma_order + 1.0) / gamma(nu / 2.0 + gamma_order + 1.0);
            s += k * tau.powf(nu) * 0.5 * nu * beta;
        }
        return Ok(s);
    }
    let grid = fam.chi_layout(eps);
    let chi = PanelFunction::from_fn(&grid, |x| fam.chi_eps(eps, x));
    let sm = SmoothedN { mu, eps, chi_cum: chi.cumulative(), chi };
    let mut breaks = vec![0.0, tau];
    for &(x, _) in &mu.atoms {
        for &b in grid.breaks() {
            breaks.push(x + b);
        }
    }
    let mut value = integrate_pieces(|s| g_gamma(gamma_order, s / tau) * sm.eval(s), &breaks, 0.0, tau, gamma_order, tau)?;
    value *= 2.0 * gamma_order / tau;
    Ok(value)
}

/// ∫_a^b f over the pieces cut by `breaks`; when γ < 1 the last piece carries the
/// (τ−σ)^{γ−1} singularity and is integrated in u = (τ−σ)^γ.
fn integrate_pieces<F: Fn(f64) -> f64>(
    f: F,
    breaks: &[f64],
    a: f64,
    b: f64,
    gamma_order: f64,
    tau: f64,
) -> Result<f64, TauberianError> {
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|&x| x >= a && x <= b).collect();
    pts.push(a);
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * (1.0 + y.abs()));
    let mut total = 0.0;
    let last = pts.len() - 2;
    for (i, w) in pts.windows(2).enumerate() {
        let (lo, hi) = (w[0], w[1]);
        if i == last && gamma_order < 1.0 && hi == tau {
            // (τ−σ)^{γ−1} dσ = −du/γ; the remaining factor is smooth in u
            let top = (hi - lo).powf(gamma_order);
            let g = |u: f64| {
                let s = tau - u.powf(1.0 / gamma_order);
                let singular = (tau - s).powf(gamma_order - 1.0);
                if singular.is_finite() && singular > 0.0 {
                    f(s) / singular / gamma_order
                } else {
                    0.0
                }
            };
            total += adaptive(g, 0.0, top, 1e-13, 1e-12)?.0;
        } else {
            total += adaptive(&f, lo, hi, 1e-13, 1e-12)?.0;
        }
    }
    Ok(total)
}

/// Coefficients (ascending) of G_m(x) = (1−x²)^{m−1} x.
fn g_poly(m: usize) -> Vec<f64> {
    let mut c = vec![0.0; 2 * m];
    let mut binom = 1.0;
    for i in 0..m {
        c[2 * i + 1] = if i % 2 == 0 { binom } else { -binom };
        binom = binom * (m - 1 - i) as f64 / (i + 1) as f64;
    }
    c
}

fn poly_derivative(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(i, v)| i as f64 * v).collect()
}

fn poly_eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, v| acc * x + v)
}

/// Both sides of the iterated integration-by-parts identity for R_{μ,ε}^m(τ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub m: usize,
    pub eps: f64,
    pub tau: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// Evaluates R_{μ,ε}^m(τ) directly and through the three-sum expansion in the
/// hierarchy (φ*N_μ bulk terms, φ_{m+1−j,ε}*T_μ remainder terms and the boundary
/// term at τ), returning both and their difference.
pub fn verify_iterated_identity(
    mu: &AtomicMeasure,
    m: usize,
    eps: f64,
    tau: f64,
    fam: &MollifierFamily,
) -> Result<IdentityReport, TauberianError> {
    let h = build_phi_hierarchy(fam, eps, m + 1)?;
    verify_iterated_identity_with(mu, m, tau, &h)
}

/// As `verify_iterated_identity`, reusing a hierarchy of depth >= m + 1.
pub fn verify_iterated_identity_with(
    mu: &AtomicMeasure,
    m: usize,
    tau: f64,
    h: &PhiHierarchy,
) -> Result<IdentityReport, TauberianError> {
    mu.check_atomic()?;
    if m == 0 || m + 1 > h.k_max {
        return Err(TauberianError::InvalidArgument(format!("need 1 <= m <= depth − 1 = {}, got {m}", h.k_max - 1)));
    }
    if !(tau > 0.0) {
        return Err(TauberianError::InvalidArgument(format!("tau must be positive, got {tau}")));
    }
    let t_max = *h.grid.breaks().last().unwrap();
    let reach = tau + mu.atoms.last().map_or(0.0, |a| a.0);
    if reach > t_max - 1.0 {
        return Err(TauberianError::InvalidArgument(format!(
            "tau + largest atom = {reach} exceeds the tabulated range ±{t_max}"
        )));
    }
    let eps = h.eps;
    let mf = m as f64;
    let g = g_poly(m);
    let mut derivs = vec![g.clone()];
    for j in 1..=m {
        derivs.push(poly_derivative(&derivs[j - 1]));
    }
    let mut breaks = Vec::new();
    for &(x, _) in &mu.atoms {
        for &b in h.grid.breaks() {
            if b.abs() <= eps + 1e-15 {
                breaks.push(x + b);
                breaks.push(b - x);
            }
        }
    }
    let integrate = |f: &dyn Fn(f64) -> f64| integrate_pieces(f, &breaks, 0.0, tau, 1.0, tau);

    let lhs = 2.0 * mf / tau * integrate(&|s| poly_eval(&g, s / tau) * h.chi_conv_n(mu, s))?;

    let mut rhs = 0.0;
    for j in (0..=m).step_by(2) {
        let gj = &derivs[j];
        let bulk = integrate(&|s| poly_eval(gj, s / tau) * h.conv_n(0, mu, s))?;
        rhs += 2.0 * mf * h.b[j] * tau.powi(-(j as i32) - 1) * bulk;
    }
    let sign_m = if m % 2 == 0 { 1.0 } else { -1.0 };
    let gm = &derivs[m];
    for j in (0..=m).step_by(2) {
        let rem = integrate(&|s| poly_eval(gm, s / tau) * h.conv_t(m + 1 - j, mu, s))?;
        rhs -= 2.0 * mf * sign_m * h.b[j] * tau.powi(-(m as i32) - 1) * rem;
    }
    let fact: f64 = (1..=m).map(|i| i as f64).product();
    for j in (0..m).step_by(2) {
        rhs -= 2f64.powi(m as i32) * fact * h.b[j] * tau.powi(-(m as i32)) * h.conv_n(m - j, mu, tau);
    }
    Ok(IdentityReport { m, eps, tau, lhs, rhs, residual: (lhs - rhs).abs() })
}

/// (φ_{l,ε} * N_μ)(0), which vanishes for even l and odd N_μ.
pub fn even_convolution_at_zero(h: &PhiHierarchy, l: usize, mu: &AtomicMeasure) -> f64 {
    h.conv_n(l, mu, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::OnceLock;

    fn fam() -> &'static MollifierFamily {
        static F: OnceLock<MollifierFamily> = OnceLock::new();
        F.get_or_init(|| build_mollifier(MollifierKind::BumpSquared))
    }

    #[test]
    fn mollifier_invariants() {
        let inv = fam().invariants();
        assert!((inv.phi_integral - 1.0).abs() < 1e-10, "{inv:?}");
        assert!((inv.chi_integral - 1.0).abs() < 1e-10, "{inv:?}");
        assert!(inv.max_evenness_defect < 1e-12);
        assert!(inv.max_phi_hat_outside < 1e-9, "{inv:?}");
        // φ̂(0) = ∫φ; the transform is the autocorrelation of the bump, positive inside
        assert!((fam().phi_hat(0.0) - 1.0).abs() < 1e-10);
        assert!(fam().phi_hat(0.5) > 0.0);
        // ∫_{−1}^{1} e^{−1/(1−s²)} ds
        assert!((fam().chi_norm - 0.443_993_816_168_079_4).abs() < 1e-13);
    }

    #[test]
    fn b_coefficients() {
        for &eps in &[1.0, 0.1] {
            let h = build_phi_hierarchy(fam(), eps, 6).unwrap();
            assert_eq!(h.b(0), 1.0);
            for m in [1, 3, 5] {
                assert_eq!(h.b(m), 0.0);
            }
            // unrolled once: b_2 = −∫φ_2 = −(M₂(φ) − ε²M₂(χ))/2 from second moments
            let wide = fam().layout(1.0);
            let m2 = |f: &(dyn Fn(f64) -> f64 + Sync)| PanelFunction::from_fn(&wide, |x| x * x * f(x)).integral();
            let want = -0.5 * (m2(&|x| fam().phi(x)) - eps * eps * m2(&|x| fam().chi(x)));
            assert!((h.b(2) - want).abs() < 1e-10, "{} vs {want}", h.b(2));
            for m in (2..=6).step_by(2) {
                assert!((h.b(m) - h.b_closed_form(m)).abs() < 1e-10);
            }
        }
        assert!(build_phi_hierarchy(fam(), 0.5, 9).is_err());
        assert!(build_phi_hierarchy(fam(), 0.0, 3).is_err());
    }

    #[test]
    fn hierarchy_structure() {
        let h = build_phi_hierarchy(fam(), 0.1, 6).unwrap();
        for k in 0..=6 {
            assert!(h.parity_defect(k) < 1e-12 * h.phi(k).sup_abs().max(1.0), "k = {k}");
        }
        for k in 1..=6 {
            let d = h.phi(k).derivative();
            let want = if k % 2 == 0 { h.phi(k - 1).clone() } else { h.phi(k - 1).combine(1.0, h.chi(), -h.integral(k - 1)) };
            let scale = want.sup_abs();
            // compare away from ±ε, where χ_ε is only C^∞ and the derivative of the interpolant is least accurate
            for &x in &[-3.0, -0.5, 0.0, 0.05, 0.3, 1.7, 6.0] {
                assert!((d.eval(x) - want.eval(x)).abs() < 1e-7 * scale, "k = {k}, x = {x}");
            }
        }
        for eps in [1.0, 0.1, 0.01] {
            let h = build_phi_hierarchy(fam(), eps, 6).unwrap();
            let rows = majorant_check(&h);
            assert_eq!(rows[0].sup_ratio, 1.0);
            for r in &rows {
                assert!(r.sup_ratio.is_finite() && r.min_psi > 0.0, "eps = {eps}: {r:?}");
            }
        }
    }

    #[test]
    fn smoothed_riesz_examples() {
        let d1 = AtomicMeasure::atoms_only(vec![(1.0, 1.0)]).unwrap();
        assert_eq!(smoothed_riesz(&d1, 1.0, 2.0, 0.0, fam()).unwrap(), 0.75);
        let r = smoothed_riesz(&d1, 1.0, 2.0, 1e-3, fam()).unwrap();
        assert!((r - 0.75).abs() < 1e-5, "{r}");
        assert_eq!(smoothed_riesz(&d1, 1.0, 0.5, 0.0, fam()).unwrap(), 0.0);
        let r01 = smoothed_riesz(&d1, 1.0, 2.0, 0.1, fam()).unwrap();
        let r001 = smoothed_riesz(&d1, 1.0, 2.0, 0.01, fam()).unwrap();
        assert!((r01 - 0.75).abs() <= 0.1 && (r001 - 0.75).abs() <= 0.01);
        assert!((r001 - 0.75).abs() < (r01 - 0.75).abs());
        // non-integer γ: singular weight at τ
        let r = smoothed_riesz(&d1, 0.5, 2.0, 1e-3, fam()).unwrap();
        assert!((r - 0.75f64.sqrt()).abs() < 1e-5, "{r}");
        // background density u ↦ 2u (ν = 2, K = 1): ∫₀^τ (1−σ²/τ²) 2σ dσ = τ²/2
        let bg = AtomicMeasure::new(vec![], vec![(1.0, 2.0)], 0.0).unwrap();
        assert!((smoothed_riesz(&bg, 1.0, 3.0, 0.0, fam()).unwrap() - 4.5).abs() < 1e-12);
        assert!((smoothed_riesz(&bg, 1.0, 3.0, 0.05, fam()).unwrap() - 4.5).abs() < 1e-3);
    }

    #[test]
    fn identity_examples() {
        let d1 = AtomicMeasure::atoms_only(vec![(1.0, 1.0)]).unwrap();
        let r = verify_iterated_identity(&d1, 1, 0.05, 3.0, fam()).unwrap();
        assert!(r.residual < 1e-6, "{r:?}");
        let two = AtomicMeasure::atoms_only(vec![(1.0, 1.0), (2.0, 1.0)]).unwrap();
        let r = verify_iterated_identity(&two, 2, 0.05, 3.0, fam()).unwrap();
        assert!(r.residual < 1e-5, "{r:?}");
        let r = verify_iterated_identity(&AtomicMeasure::zero(), 2, 0.1, 3.0, fam()).unwrap();
        assert_eq!(r.residual, 0.0);
        let bg = AtomicMeasure::new(vec![], vec![(1.0, 2.0)], 0.0).unwrap();
        assert!(verify_iterated_identity(&bg, 1, 0.1, 3.0, fam()).is_err());
    }

    #[test]
    fn even_convolutions_vanish_at_zero() {
        let h = build_phi_hierarchy(fam(), 0.1, 6).unwrap();
        let mu = AtomicMeasure::atoms_only(vec![(0.3, 1.0), (1.1, -0.4), (2.5, 2.0)]).unwrap();
        for l in (0..=6).step_by(2) {
            assert!(even_convolution_at_zero(&h, l, &mu).abs() < 1e-9);
        }
    }

    #[test]
    fn distribution_function_conventions() {
        let mu = AtomicMeasure::new(vec![(0.0, 1.0), (2.0, 3.0)], vec![], 0.0).unwrap();
        let n = mu.distribution();
        assert_eq!(n.eval(0.0), 0.0);
        assert_eq!(n.eval(1.0), 1.0);
        assert_eq!(n.eval(2.0), 2.5);
        assert_eq!(n.eval(-2.0), -2.5);
        let signed = AtomicMeasure::new(vec![(0.0, -1.0)], vec![], 0.5).unwrap();
        assert!(!signed.augmented_nonnegative());
        let ok = AtomicMeasure::new(vec![(0.0, -1.0), (1.0, 2.0)], vec![(1.0, 1.0)], 1.0).unwrap();
        assert!(ok.augmented_nonnegative());
        assert!(AtomicMeasure::new(vec![(-1.0, 1.0)], vec![], 0.0).is_err());
    }

    #[test]
    fn g_polynomials() {
        assert_eq!(g_poly(1), vec![0.0, 1.0]);
        assert_eq!(g_poly(2), vec![0.0, 1.0, 0.0, -1.0]);
        let g3 = g_poly(3);
        for &x in &[0.2, -0.7] {
            assert!((poly_eval(&g3, x) - g_gamma(3.0, x)).abs() < 1e-15);
        }
        // G_m^{(m−1)}(1) = (−2)^{m−1}(m−1)!
        let mut d = g_poly(4);
        for _ in 0..3 {
            d = poly_derivative(&d);
        }
        assert_eq!(poly_eval(&d, 1.0), -48.0);
    }
}
