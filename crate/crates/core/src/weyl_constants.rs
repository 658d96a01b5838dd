//! Semiclassical constants and the asymptotic predictors for Riesz means and heat traces.
//!
//! Note on normalization: the constant is `Γ(γ+1) / ((4π)^{d/2} Γ(γ+d/2+1))`, the
//! standard Weyl constant, which gives `L_{0,2} = 1/(4π)` and `L_{0,1} = 1/π`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::special::gamma;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstantsError {
    #[error("invalid parameters: gamma = {gamma}, dim = {dim}")]
    InvalidParams { gamma: f64, dim: usize },
    #[error("corner angle {0} outside (0, 2π]")]
    BadAngle(f64),
    #[error("at least one corner angle is required")]
    NoAngles,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

impl BoundaryCondition {
    /// Sign of the boundary term: −1 for Dirichlet, +1 for Neumann.
    pub fn sign(self) -> f64 {
        match self {
            BoundaryCondition::Dirichlet => -1.0,
            BoundaryCondition::Neumann => 1.0,
        }
    }
}

impl std::str::FromStr for BoundaryCondition {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dirichlet" | "d" => Ok(BoundaryCondition::Dirichlet),
            "neumann" | "n" => Ok(BoundaryCondition::Neumann),
            other => Err(format!("unknown boundary condition '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemiclassicalParams {
    pub gamma: f64,
    pub dim: usize,
}

impl SemiclassicalParams {
    pub fn new(gamma: f64, dim: usize) -> Result<Self, ConstantsError> {
        if !(gamma >= 0.0) || !gamma.is_finite() || dim == 0 {
            return Err(ConstantsError::InvalidParams { gamma, dim });
        }
        Ok(SemiclassicalParams { gamma, dim })
    }
}

/// A computed quantity next to its prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionReport {
    pub computed: f64,
    pub predicted: f64,
    pub remainder: f64,
    pub envelope: f64,
    pub lambda_or_t: f64,
}

impl PredictionReport {
    pub fn new(computed: f64, predicted: f64, envelope: f64, lambda_or_t: f64) -> Self {
        PredictionReport { computed, predicted, remainder: computed - predicted, envelope, lambda_or_t }
    }
}

/// L_{γ,d} = Γ(γ+1) / ((4π)^{d/2} Γ(γ+d/2+1)).
pub fn lt_constant(p: SemiclassicalParams) -> f64 {
    let d = p.dim as f64;
    gamma(p.gamma + 1.0) / ((4.0 * PI).powf(0.5 * d) * gamma(p.gamma + 0.5 * d + 1.0))
}

fn lt(gamma: f64, dim: usize) -> f64 {
    lt_constant(SemiclassicalParams { gamma, dim })
}

/// L|Ω|λ^{γ+d/2} ∓ (1/4) L_{γ,d−1} Per λ^{γ+(d−1)/2}.
pub fn two_term_prediction(
    lambda: f64,
    p: SemiclassicalParams,
    volume: f64,
    perimeter: f64,
    bc: BoundaryCondition,
) -> f64 {
    let d = p.dim as f64;
    let lead = lt(p.gamma, p.dim) * volume * lambda.powf(p.gamma + 0.5 * d);
    if p.dim == 1 {
        // the boundary of an interval is two points; L_{γ,0} = 1
        return lead + bc.sign() * 0.25 * perimeter * lambda.powf(p.gamma);
    }
    lead + bc.sign() * 0.25 * lt(p.gamma, p.dim - 1) * perimeter * lambda.powf(p.gamma + 0.5 * (d - 1.0))
}

/// Σ_i (π² − α_i²)/(24π α_i).
pub fn corner_sum(angles: &[f64]) -> Result<f64, ConstantsError> {
    if angles.is_empty() {
        return Err(ConstantsError::NoAngles);
    }
    let mut s = 0.0;
    for &a in angles {
        if !(a > 0.0 && a <= 2.0 * PI) {
            return Err(ConstantsError::BadAngle(a));
        }
        s += (PI * PI - a * a) / (24.0 * PI * a);
    }
    Ok(s)
}

/// Two-term prediction in d = 2 plus the corner term λ^γ Σ(π²−α²)/(24πα).
pub fn three_term_polygon_prediction(
    lambda: f64,
    gamma: f64,
    area: f64,
    perimeter: f64,
    angles: &[f64],
    bc: BoundaryCondition,
) -> Result<f64, ConstantsError> {
    let p = SemiclassicalParams::new(gamma, 2)?;
    let c = corner_sum(angles)?;
    Ok(two_term_prediction(lambda, p, area, perimeter, bc) + lambda.powf(gamma) * c)
}

/// (4πt)^{−d/2}(|Ω| ∓ (√(πt)/2) Per).
pub fn heat_two_term_prediction(t: f64, dim: usize, volume: f64, perimeter: f64, bc: BoundaryCondition) -> f64 {
    (4.0 * PI * t).powf(-0.5 * dim as f64) * (volume + bc.sign() * 0.5 * (PI * t).sqrt() * perimeter)
}

/// |Ω|/(4πt) − Per/(8√(πt)) + corner sum (Dirichlet polygon heat trace).
pub fn heat_polygon_prediction(t: f64, area: f64, perimeter: f64, angles: &[f64]) -> Result<f64, ConstantsError> {
    let c = corner_sum(angles)?;
    Ok(area / (4.0 * PI * t) - perimeter / (8.0 * (PI * t).sqrt()) + c)
}

/// Exponentially small error bound of the polygon heat expansion:
/// (5n + 20|Ω|/R²) α^{−2} exp(−R² sin²(α/2)/(16t)), α the smallest angle.
pub fn heat_polygon_error_bound(t: f64, area: f64, corner_radius: f64, angles: &[f64]) -> Result<f64, ConstantsError> {
    corner_sum(angles)?;
    let n = angles.len() as f64;
    let alpha = angles.iter().copied().fold(f64::INFINITY, f64::min);
    let r2 = corner_radius * corner_radius;
    let s = (0.5 * alpha).sin();
    Ok((5.0 * n + 20.0 * area / r2) / (alpha * alpha) * (-r2 * s * s / (16.0 * t)).exp())
}

/// The Hölder-type exponent used in the envelope: 1 for γ ≥ 1, `alpha_fraction·γ` otherwise.
pub fn envelope_alpha(gamma: f64, alpha_fraction: f64) -> f64 {
    if gamma >= 1.0 {
        1.0
    } else {
        alpha_fraction * gamma
    }
}

/// Default fraction used for γ < 1.
pub const DEFAULT_ALPHA_FRACTION: f64 = 0.9;

/// Remainder envelope for convex domains with unit normalizing constant.
/// Dirichlet: Per λ^{γ+(d−1)/2} (r√λ)^{−α/11};
/// Neumann: Per λ^{γ+(d−1)/2} [(1 + ln₊(r√λ))^{−α max(1,γ)} + (r√λ)^{1−d}].
pub fn error_envelope(
    lambda: f64,
    gamma: f64,
    perimeter: f64,
    r_in: f64,
    dim: usize,
    bc: BoundaryCondition,
    alpha: f64,
) -> f64 {
    let d = dim as f64;
    let base = perimeter * lambda.powf(gamma + 0.5 * (d - 1.0));
    let x = r_in * lambda.sqrt();
    match bc {
        BoundaryCondition::Dirichlet => base * x.powf(-alpha / 11.0),
        BoundaryCondition::Neumann => {
            let lnp = x.ln().max(0.0);
            base * ((1.0 + lnp).powf(-alpha * gamma.max(1.0)) + x.powf(1.0 - d))
        }
    }
}

/// Envelope of the Neumann convex heat-trace remainder with unit constant:
/// Per √t [(√t/r)^{1/2−ε} + (√t/r)^{d−1}].
pub fn neumann_heat_envelope(t: f64, perimeter: f64, r_in: f64, dim: usize, eps: f64) -> f64 {
    let s = t.sqrt() / r_in;
    perimeter * t.sqrt() * (s.powf(0.5 - eps) + s.powf(dim as f64 - 1.0))
}
