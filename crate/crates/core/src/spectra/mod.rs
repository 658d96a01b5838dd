//! Spectra of the planar Laplacian and the spectral functionals built on them:
//! counting functions, Riesz means, heat traces and pointwise spectral functions.

mod exact;
pub mod fd;
pub mod io;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::convex_geometry::{ConvexPolygon, GeometryError, Point};
use crate::special::{upper_incomplete_gamma, SpecialError};
use crate::weyl_constants::{lt_constant, BoundaryCondition, SemiclassicalParams};

pub use exact::{disk_spectrum, rectangle_modes, rectangle_spectrum, RectangleMode, MAX_ENUMERATED};
pub use fd::{polygon_dirichlet_spectrum_fd, FdOptions};

#[derive(Debug, Error)]
pub enum SpectraError {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Special(#[from] SpecialError),
    #[error("lambda = {lambda} exceeds the certified range (complete below {complete_below})")]
    OutOfCertifiedRange { lambda: f64, complete_below: f64 },
    #[error("enumeration needs about {needed} eigenvalues, above the cap of {cap}")]
    Capacity { needed: f64, cap: usize },
    #[error("heat-trace tail bound {tail:e} exceeds tolerance {tol:e}")]
    TailTooLarge { tail: f64, tol: f64 },
    #[error("point ({0}, {1}) is not strictly inside the domain")]
    PointNotInterior(f64, f64),
    #[error("spectra do not match: {0}")]
    Mismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("grid has {interior} interior points, fewer than the {requested} requested eigenvalues")]
    InsufficientResolution { interior: usize, requested: usize },
    #[error("grid spacing {h} must be below half the inradius {r_in}")]
    GridTooCoarse { h: f64, r_in: f64 },
    #[error("eigensolver did not converge: {0}")]
    NoConvergence(String),
    #[error("matrix is not positive definite at pivot {0}")]
    NotPositiveDefinite(usize),
    #[error("malformed spectrum file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A planar domain. Rectangles occupy [0, a] × [0, b], disks are centered at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Rectangle { a: f64, b: f64 },
    Disk { radius: f64 },
    ConvexPolygon(ConvexPolygon),
}

impl Domain {
    pub fn rectangle(a: f64, b: f64) -> Result<Self, SpectraError> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(SpectraError::InvalidDomain(format!("rectangle sides must be positive, got {a} x {b}")));
        }
        Ok(Domain::Rectangle { a, b })
    }

    pub fn disk(radius: f64) -> Result<Self, SpectraError> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(SpectraError::InvalidDomain(format!("disk radius must be positive, got {radius}")));
        }
        Ok(Domain::Disk { radius })
    }

    pub fn polygon(vertices: Vec<Point>) -> Result<Self, SpectraError> {
        Ok(Domain::ConvexPolygon(ConvexPolygon::new(vertices)?))
    }

    pub fn unit_square() -> Self {
        Domain::Rectangle { a: 1.0, b: 1.0 }
    }

    pub fn area(&self) -> f64 {
        match self {
            Domain::Rectangle { a, b } => a * b,
            Domain::Disk { radius } => PI * radius * radius,
            Domain::ConvexPolygon(p) => p.area(),
        }
    }

    pub fn perimeter(&self) -> f64 {
        match self {
            Domain::Rectangle { a, b } => 2.0 * (a + b),
            Domain::Disk { radius } => 2.0 * PI * radius,
            Domain::ConvexPolygon(p) => p.perimeter(),
        }
    }

    pub fn inradius(&self) -> f64 {
        match self {
            Domain::Rectangle { a, b } => 0.5 * a.min(*b),
            Domain::Disk { radius } => *radius,
            Domain::ConvexPolygon(p) => p.inradius(),
        }
    }

    /// Interior angles for polygonal domains (rectangles included).
    pub fn angles(&self) -> Option<Vec<f64>> {
        match self {
            Domain::Rectangle { .. } => Some(vec![0.5 * PI; 4]),
            Domain::Disk { .. } => None,
            Domain::ConvexPolygon(p) => Some(p.angles().to_vec()),
        }
    }

    /// d_Ω(x); negative outside.
    pub fn dist_to_boundary(&self, x: Point) -> f64 {
        match self {
            Domain::Rectangle { a, b } => x[0].min(a - x[0]).min(x[1]).min(b - x[1]),
            Domain::Disk { radius } => radius - x[0].hypot(x[1]),
            Domain::ConvexPolygon(p) => p.dist_to_boundary(x),
        }
    }

    /// The same domain dilated by s (areas scale by s²).
    pub fn scaled(&self, s: f64) -> Result<Self, SpectraError> {
        match self {
            Domain::Rectangle { a, b } => Domain::rectangle(s * a, s * b),
            Domain::Disk { radius } => Domain::disk(s * radius),
            Domain::ConvexPolygon(p) => Ok(Domain::ConvexPolygon(p.scaled(s)?)),
        }
    }

    pub fn as_polygon(&self) -> Option<ConvexPolygon> {
        match self {
            Domain::Rectangle { a, b } => ConvexPolygon::rectangle(*a, *b).ok(),
            Domain::Disk { .. } => None,
            Domain::ConvexPolygon(p) => Some(p.clone()),
        }
    }
}

/// A sorted, multiplicity-expanded list of eigenvalues, complete below `complete_below`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    bc: BoundaryCondition,
    complete_below: f64,
    domain: Domain,
    exact: bool,
}

impl Spectrum {
    pub fn new(
        eigenvalues: Vec<f64>,
        bc: BoundaryCondition,
        complete_below: f64,
        domain: Domain,
        exact: bool,
    ) -> Result<Self, SpectraError> {
        if !(complete_below > 0.0) {
            return Err(SpectraError::InvalidArgument(format!("complete_below must be positive, got {complete_below}")));
        }
        if eigenvalues.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(SpectraError::InvalidArgument("eigenvalues must be finite and nonnegative".into()));
        }
        if eigenvalues.windows(2).any(|w| w[1] < w[0]) {
            return Err(SpectraError::InvalidArgument("eigenvalues must be sorted".into()));
        }
        if bc == BoundaryCondition::Dirichlet && eigenvalues.first().is_some_and(|&v| v <= 0.0) {
            return Err(SpectraError::InvalidArgument("Dirichlet eigenvalues must be positive".into()));
        }
        Ok(Spectrum { eigenvalues, bc, complete_below, domain, exact })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }
    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }
    pub fn complete_below(&self) -> f64 {
        self.complete_below
    }
    pub fn domain(&self) -> &Domain {
        &self.domain
    }
    pub fn exact(&self) -> bool {
        self.exact
    }

    /// Eigenvalues strictly below λ (all certified when λ <= complete_below).
    pub fn below(&self, lambda: f64) -> Result<&[f64], SpectraError> {
        if !(lambda <= self.complete_below) {
            return Err(SpectraError::OutOfCertifiedRange { lambda, complete_below: self.complete_below });
        }
        let k = self.eigenvalues.partition_point(|&v| v < lambda);
        Ok(&self.eigenvalues[..k])
    }

    /// Rescale the domain by s: eigenvalues divide by s².
    pub fn rescaled(&self, s: f64) -> Result<Self, SpectraError> {
        let f = 1.0 / (s * s);
        Spectrum::new(
            self.eigenvalues.iter().map(|v| v * f).collect(),
            self.bc,
            self.complete_below * f,
            self.domain.scaled(s)?,
            self.exact,
        )
    }
}

/// N(λ) = #{n : λ_n < λ}.
pub fn counting_function(spec: &Spectrum, lambda: f64) -> Result<usize, SpectraError> {
    Ok(spec.below(lambda)?.len())
}

/// Σ_{λ_n < λ} (λ − λ_n)^γ.
pub fn riesz_mean(spec: &Spectrum, lambda: f64, gamma: f64) -> Result<f64, SpectraError> {
    if !(gamma >= 0.0) {
        return Err(SpectraError::InvalidArgument(format!("gamma must be >= 0, got {gamma}")));
    }
    let ev = spec.below(lambda)?;
    if gamma == 0.0 {
        return Ok(ev.len() as f64);
    }
    // sum from the smallest terms upward
    Ok(ev.iter().rev().map(|&e| (lambda - e).powf(gamma)).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatTrace {
    pub value: f64,
    pub tail_bound: f64,
}

/// Σ e^{−tλ_n} over the certified eigenvalues plus a bound on the omitted tail,
/// C t^{−d/2} Γ(d/2 + 1, tΛ) with C = 4^d L_{0,d} |Ω| (d = 2). When `tol` is
/// given, a tail above it is an error.
pub fn heat_trace(spec: &Spectrum, t: f64, volume: f64, tol: Option<f64>) -> Result<HeatTrace, SpectraError> {
    if !(t > 0.0) {
        return Err(SpectraError::InvalidArgument(format!("t must be positive, got {t}")));
    }
    let lam = spec.complete_below;
    let value: f64 = spec.below(lam)?.iter().rev().map(|&e| (-t * e).exp()).sum();
    let d = 2.0;
    let c = 4f64.powf(d) * lt_constant(SemiclassicalParams { gamma: 0.0, dim: 2 }) * volume;
    let tail_bound = c * t.powf(-0.5 * d) * upper_incomplete_gamma(0.5 * d + 1.0, t * lam)?;
    if let Some(tol) = tol {
        if tail_bound > tol {
            return Err(SpectraError::TailTooLarge { tail: tail_bound, tol });
        }
    }
    Ok(HeatTrace { value, tail_bound })
}

fn check_interior_rect(a: f64, b: f64, x: Point) -> Result<(), SpectraError> {
    if !(x[0] > 0.0 && x[0] < a && x[1] > 0.0 && x[1] < b) {
        return Err(SpectraError::PointNotInterior(x[0], x[1]));
    }
    Ok(())
}

/// Precomputed rectangle modes for repeated pointwise evaluations at one point.
#[derive(Debug, Clone)]
pub struct PointwiseModes {
    /// (λ_mn, |φ_mn(x)|²) sorted by λ.
    modes: Vec<(f64, f64)>,
    lambda_max: f64,
}

impl PointwiseModes {
    pub fn new(a: f64, b: f64, x: Point, bc: BoundaryCondition, lambda_max: f64) -> Result<Self, SpectraError> {
        check_interior_rect(a, b, x)?;
        let modes = rectangle_modes(a, b, bc, lambda_max)?;
        let sq = |k: usize, s: f64, len: f64| -> f64 {
            match bc {
                BoundaryCondition::Dirichlet => 2.0 / len * (k as f64 * PI * s / len).sin().powi(2),
                BoundaryCondition::Neumann if k == 0 => 1.0 / len,
                BoundaryCondition::Neumann => 2.0 / len * (k as f64 * PI * s / len).cos().powi(2),
            }
        };
        let modes = modes.iter().map(|m| (m.lambda, sq(m.m, x[0], a) * sq(m.n, x[1], b))).collect();
        Ok(PointwiseModes { modes, lambda_max })
    }

    /// (−Δ − λ)_−^γ(x, x) = Σ_{λ_mn < λ} (λ − λ_mn)^γ |φ_mn(x)|².
    pub fn value(&self, lambda: f64, gamma: f64) -> Result<f64, SpectraError> {
        if lambda > self.lambda_max {
            return Err(SpectraError::OutOfCertifiedRange { lambda, complete_below: self.lambda_max });
        }
        let k = self.modes.partition_point(|m| m.0 < lambda);
        Ok(self.modes[..k]
            .iter()
            .rev()
            .map(|&(l, w)| if gamma == 0.0 { w } else { (lambda - l).powf(gamma) * w })
            .sum())
    }
}

/// Pointwise Riesz mean (−Δ−λ)_−^γ(x,x) on the rectangle [0,a]×[0,b].
pub fn pointwise_spectral_function(
    rect: &Domain,
    x: Point,
    lambda: f64,
    gamma: f64,
    bc: BoundaryCondition,
) -> Result<f64, SpectraError> {
    let Domain::Rectangle { a, b } = *rect else {
        return Err(SpectraError::InvalidDomain("pointwise spectral functions need a rectangle".into()));
    };
    if !(gamma >= 0.0) {
        return Err(SpectraError::InvalidArgument(format!("gamma must be >= 0, got {gamma}")));
    }
    PointwiseModes::new(a, b, x, bc, lambda)?.value(lambda, gamma)
}

/// e_λ(x, x) sampled at several λ, with the distance of x to the boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralFunctionSample {
    pub point: Point,
    pub dist_to_boundary: f64,
    /// (λ, e_λ(x,x)) pairs in increasing λ.
    pub values: Vec<(f64, f64)>,
}

pub fn spectral_function_sample(
    rect: &Domain,
    x: Point,
    lambdas: &[f64],
    bc: BoundaryCondition,
) -> Result<SpectralFunctionSample, SpectraError> {
    let Domain::Rectangle { a, b } = *rect else {
        return Err(SpectraError::InvalidDomain("pointwise spectral functions need a rectangle".into()));
    };
    if lambdas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SpectraError::InvalidArgument("lambdas must be strictly increasing".into()));
    }
    let top = lambdas.last().copied().unwrap_or(1.0);
    let pm = PointwiseModes::new(a, b, x, bc, top)?;
    let values = lambdas.iter().map(|&l| Ok((l, pm.value(l, 0.0)?))).collect::<Result<_, SpectraError>>()?;
    Ok(SpectralFunctionSample { point: x, dist_to_boundary: rect.dist_to_boundary(x), values })
}

/// f(λ) = Tr(−Δ^N − λ)_−^γ − Tr(−Δ^D − λ)_−^γ.
pub fn dirichlet_neumann_trace_gap(
    spec_d: &Spectrum,
    spec_n: &Spectrum,
    lambda: f64,
    gamma: f64,
) -> Result<f64, SpectraError> {
    if spec_d.domain != spec_n.domain {
        return Err(SpectraError::Mismatch("spectra belong to different domains".into()));
    }
    if spec_d.bc != BoundaryCondition::Dirichlet || spec_n.bc != BoundaryCondition::Neumann {
        return Err(SpectraError::Mismatch("expected a Dirichlet and a Neumann spectrum".into()));
    }
    Ok(riesz_mean(spec_n, lambda, gamma)? - riesz_mean(spec_d, lambda, gamma)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate_right_weighted, Rule};
    use proptest::prelude::*;

    fn square(bc: BoundaryCondition, lmax: f64) -> Spectrum {
        rectangle_spectrum(1.0, 1.0, bc, lmax).unwrap()
    }

    #[test]
    fn square_low_spectrum() {
        let d = square(BoundaryCondition::Dirichlet, 200.0);
        assert!((d.eigenvalues()[0] - 2.0 * PI * PI).abs() < 1e-12);
        assert_eq!(counting_function(&d, 50.0).unwrap(), 3);
        assert_eq!(counting_function(&d, 0.0).unwrap(), 0);
        // ties are not counted
        assert_eq!(counting_function(&d, 2.0 * PI * PI).unwrap(), 0);
        assert!((riesz_mean(&d, 30.0, 1.0).unwrap() - (30.0 - 2.0 * PI * PI)).abs() < 1e-12);
        assert_eq!(riesz_mean(&d, 10.0, 1.0).unwrap(), 0.0);
        assert!(counting_function(&d, 201.0).is_err());
        let n = square(BoundaryCondition::Neumann, 200.0);
        assert_eq!(n.eigenvalues()[0], 0.0);
    }

    #[test]
    fn heat_trace_square() {
        let d = square(BoundaryCondition::Dirichlet, 4000.0);
        let h = heat_trace(&d, 1.0, 1.0, Some(1e-12)).unwrap();
        let theta: f64 = (1..10).map(|m| (-PI * PI * (m * m) as f64).exp()).sum();
        assert!((h.value - theta * theta).abs() < 1e-22);
        assert!(heat_trace(&d, 1e-4, 1.0, Some(1e-6)).is_err());
        let n = square(BoundaryCondition::Neumann, 400.0);
        let h = heat_trace(&n, 50.0, 1.0, None).unwrap();
        assert!((h.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn heat_tail_bound_dominates_true_tail() {
        // Σ_{λ >= Λ} e^{−tλ} from a much larger enumeration
        let big = square(BoundaryCondition::Neumann, 20_000.0);
        for &lam in &[200.0, 800.0, 2000.0] {
            let small = square(BoundaryCondition::Neumann, lam);
            for &t in &[0.002, 0.01, 0.05] {
                let full = heat_trace(&big, t, 1.0, None).unwrap().value;
                let h = heat_trace(&small, t, 1.0, None).unwrap();
                assert!(full - h.value <= h.tail_bound, "Λ = {lam}, t = {t}");
            }
        }
    }

    #[test]
    fn pointwise_examples() {
        let sq = Domain::unit_square();
        let v = pointwise_spectral_function(&sq, [0.5, 0.5], 30.0, 0.0, BoundaryCondition::Dirichlet).unwrap();
        assert!((v - 4.0).abs() < 1e-12);
        let v = pointwise_spectral_function(&sq, [0.3, 0.9], 1.0, 0.0, BoundaryCondition::Neumann).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        assert!(pointwise_spectral_function(&sq, [0.0, 0.5], 30.0, 0.0, BoundaryCondition::Dirichlet).is_err());
        let s = spectral_function_sample(&sq, [0.2, 0.5], &[10.0, 100.0, 1000.0], BoundaryCondition::Dirichlet).unwrap();
        assert!((s.dist_to_boundary - 0.2).abs() < 1e-15);
        assert!(s.values.windows(2).all(|w| w[1].1 >= w[0].1));
    }

    #[test]
    fn trace_gap_example() {
        let d = square(BoundaryCondition::Dirichlet, 100.0);
        let n = square(BoundaryCondition::Neumann, 100.0);
        let f = dirichlet_neumann_trace_gap(&d, &n, 30.0, 1.0).unwrap();
        // Neumann below 30: 0, π², π², 2π²; Dirichlet below 30: 2π²
        let want = 30.0 + 2.0 * (30.0 - PI * PI) + (30.0 - 2.0 * PI * PI) - (30.0 - 2.0 * PI * PI);
        assert!((f - want).abs() < 1e-12);
        let other = rectangle_spectrum(1.0, 2.0, BoundaryCondition::Neumann, 100.0).unwrap();
        assert!(dirichlet_neumann_trace_gap(&d, &other, 30.0, 1.0).is_err());
    }

    #[test]
    fn riesz_mean_as_integral_of_counting() {
        // γ ∫_0^λ (λ−μ)^{γ−1} N(μ) dμ, split at the eigenvalues
        let d = square(BoundaryCondition::Dirichlet, 400.0);
        let rule = Rule::gauss_legendre(20);
        for &(lam, g) in &[(300.0, 1.5), (250.0, 0.5), (399.0, 2.0)] {
            let jac = Rule::gauss_jacobi(20, g - 1.0, 0.0);
            let ev = d.below(lam).unwrap();
            let mut knots: Vec<f64> = ev.to_vec();
            knots.dedup();
            knots.push(lam);
            let mut integral = 0.0;
            // N is constant between consecutive eigenvalues and vanishes below the first
            for w in knots.windows(2) {
                let count = ev.partition_point(|&e| e <= w[0]) as f64;
                integral += count
                    * if w[1] == lam {
                        integrate_right_weighted(&jac, g - 1.0, |_| 1.0, w[0], w[1])
                    } else {
                        rule.integrate(|mu| (lam - mu).powf(g - 1.0), w[0], w[1])
                    };
            }
            let want = riesz_mean(&d, lam, g).unwrap();
            assert!((g * integral - want).abs() <= 1e-8 * want, "{lam} {g}: {} vs {want}", g * integral);
        }
    }

    #[test]
    fn neumann_counts_dominate() {
        let d = square(BoundaryCondition::Dirichlet, 5000.0);
        let n = square(BoundaryCondition::Neumann, 5000.0);
        for k in 1..500 {
            let lam = 10.0 * k as f64;
            assert!(counting_function(&n, lam).unwrap() >= counting_function(&d, lam).unwrap());
        }
    }

    proptest! {
        #[test]
        fn gamma_zero_is_counting(lam in 0.0f64..3000.0) {
            let d = square(BoundaryCondition::Dirichlet, 3000.0);
            prop_assert_eq!(riesz_mean(&d, lam, 0.0).unwrap(), counting_function(&d, lam).unwrap() as f64);
        }

        #[test]
        fn scaling_covariance(a in 0.3f64..3.0, b in 0.3f64..3.0, k in 1u32..5) {
            let s = k as f64; // exact powers of two below keep the comparison bitwise
            let s = 2f64.powi(s as i32 - 2);
            let base = rectangle_spectrum(a, b, BoundaryCondition::Dirichlet, 2000.0).unwrap();
            let big = rectangle_spectrum(s * a, s * b, BoundaryCondition::Dirichlet, 2000.0 / (s * s)).unwrap();
            let scaled: Vec<f64> = base.eigenvalues().iter().map(|v| v / (s * s)).collect();
            prop_assert_eq!(big.eigenvalues(), &scaled[..]);
        }

        #[test]
        fn domain_monotonicity(a in 0.5f64..2.0, b in 0.5f64..2.0, da in 0.0f64..1.0, db in 0.0f64..1.0) {
            let small = rectangle_spectrum(a, b, BoundaryCondition::Dirichlet, 3000.0).unwrap();
            let large = rectangle_spectrum(a + da, b + db, BoundaryCondition::Dirichlet, 3000.0).unwrap();
            for (s, l) in small.eigenvalues().iter().zip(large.eigenvalues()) {
                prop_assert!(l <= s);
            }
            prop_assert!(large.eigenvalues().len() >= small.eigenvalues().len());
        }

        #[test]
        fn pointwise_nondecreasing(x in 0.01f64..0.99, y in 0.01f64..0.99) {
            let sq = Domain::unit_square();
            let lams: Vec<f64> = (1..60).map(|k| 50.0 * k as f64).collect();
            let s = spectral_function_sample(&sq, [x, y], &lams, BoundaryCondition::Dirichlet).unwrap();
            prop_assert!(s.values.windows(2).all(|w| w[1].1 >= w[0].1));
        }
    }
}
