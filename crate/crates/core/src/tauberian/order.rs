//! Empirical order of the pointwise Riesz remainder on rectangles, with the
//! exponential smallness of the diagonal heat kernel remainder checked first.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::TauberianError;
use crate::convex_geometry::Point;
use crate::spectra::{Domain, PointwiseModes, SpectraError};
use crate::weyl_constants::{lt_constant, BoundaryCondition, SemiclassicalParams};

/// Minimum span of the λ grid, in decades.
pub const MIN_DECADES: f64 = 1.5;

/// 1D diagonal heat kernel on [0, a] by images.
fn heat_1d(a: f64, x: f64, t: f64, bc: BoundaryCondition) -> f64 {
    let sign = match bc {
        BoundaryCondition::Dirichlet => -1.0,
        BoundaryCondition::Neumann => 1.0,
    };
    let reach = (4.0 * t * 750.0).sqrt();
    let n_max = (reach / (2.0 * a)).ceil() as i64 + 2;
    let mut s = 0.0;
    for n in -n_max..=n_max {
        let shift = 2.0 * n as f64 * a;
        s += (-(shift * shift) / (4.0 * t)).exp() + sign * (-((2.0 * x + shift).powi(2)) / (4.0 * t)).exp();
    }
    s / (4.0 * PI * t).sqrt()
}

/// k(t, x, x) on [0, a] × [0, b] (product of 1D image sums).
pub fn heat_kernel_diagonal(a: f64, b: f64, x: Point, t: f64, bc: BoundaryCondition) -> f64 {
    heat_1d(a, x[0], t, bc) * heat_1d(b, x[1], t, bc)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceCheck {
    pub t: f64,
    /// k(t,x,x) − (4πt)^{−1}
    pub difference: f64,
    /// (4πt)^{−1} e^{−d(x)²/(4t)}
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderPoint {
    pub lambda: f64,
    /// (−Δ−λ)_−^γ(x,x) − L_{γ,2} λ^{γ+1}
    pub remainder: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderCheck {
    pub gamma: f64,
    pub bc: BoundaryCondition,
    pub point: Point,
    pub dist_to_boundary: f64,
    pub laplace: Vec<LaplaceCheck>,
    pub points: Vec<OrderPoint>,
    /// least-squares slope of ln|remainder| against ln λ
    pub fitted_exponent: f64,
    /// γ + (d−1)/2 with d = 2
    pub reference_exponent: f64,
}

/// Fits the growth exponent of |(−Δ−λ)_−^γ(x,x) − L_{γ,2}λ^{γ+1}| over `lambda_grid`
/// after confirming the heat kernel remainder bound at t = 0.05 and t = 1/λ.
pub fn tauberian_order_check(
    rect: &Domain,
    bc: BoundaryCondition,
    x: Point,
    gamma_order: f64,
    lambda_grid: &[f64],
) -> Result<OrderCheck, TauberianError> {
    let Domain::Rectangle { a, b } = *rect else {
        return Err(SpectraError::InvalidDomain("order checks need a rectangle".into()).into());
    };
    if !(gamma_order >= 0.0) {
        return Err(TauberianError::InvalidArgument(format!("gamma must be >= 0, got {gamma_order}")));
    }
    if lambda_grid.len() < 2 || lambda_grid[0] <= 0.0 || lambda_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(TauberianError::InvalidArgument("lambda grid must be positive and strictly increasing".into()));
    }
    let decades = (lambda_grid[lambda_grid.len() - 1] / lambda_grid[0]).log10();
    if decades < MIN_DECADES {
        return Err(TauberianError::InsufficientRange { decades, required: MIN_DECADES });
    }
    let top = *lambda_grid.last().unwrap();
    let modes = PointwiseModes::new(a, b, x, bc, top)?;
    let d = rect.dist_to_boundary(x);

    let mut ts = vec![0.05];
    ts.extend(lambda_grid.iter().map(|l| 1.0 / l));
    let laplace = ts
        .into_iter()
        .map(|t| {
            let free = 1.0 / (4.0 * PI * t);
            let difference = heat_kernel_diagonal(a, b, x, t, bc) - free;
            let bound = free * (-d * d / (4.0 * t)).exp();
            let slack = 1e-14 * free;
            let holds = match bc {
                BoundaryCondition::Dirichlet => difference <= slack && -difference <= bound + slack,
                BoundaryCondition::Neumann => difference.abs() <= bound + slack,
            };
            LaplaceCheck { t, difference, bound, holds }
        })
        .collect();

    let l = lt_constant(SemiclassicalParams::new(gamma_order, 2).map_err(|e| TauberianError::InvalidArgument(e.to_string()))?);
    let points: Vec<OrderPoint> = lambda_grid
        .par_iter()
        .map(|&lam| {
            Ok(OrderPoint { lambda: lam, remainder: modes.value(lam, gamma_order)? - l * lam.powf(gamma_order + 1.0) })
        })
        .collect::<Result<_, SpectraError>>()?;
    let fit: Vec<(f64, f64)> =
        points.iter().filter(|p| p.remainder != 0.0).map(|p| (p.lambda.ln(), p.remainder.abs().ln())).collect();
    let fitted_exponent = least_squares_slope(&fit);
    Ok(OrderCheck {
        gamma: gamma_order,
        bc,
        point: x,
        dist_to_boundary: d,
        laplace,
        points,
        fitted_exponent,
        reference_exponent: gamma_order + 0.5,
    })
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
