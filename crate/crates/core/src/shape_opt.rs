//! Riesz-mean shape optimization over unit-area families: rectangles with exact
//! spectra, and (experimental) a one-parameter corner-cut square family with
//! finite-difference spectra.
//!
//! Dirichlet runs maximize Tr(−Δ−λ)_−^γ, Neumann runs minimize it. Every search
//! is a fixed schedule — a uniform pre-scan followed by golden-section refinement
//! around the best scan point — so runs are bitwise reproducible.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::convex_geometry::{ConvexPolygon, GeometryError};
use crate::spectra::fd::richardson;
use crate::spectra::{polygon_dirichlet_spectrum_fd, rectangle_spectrum, riesz_mean, FdOptions, SpectraError};
use crate::weyl_constants::{
    envelope_alpha, error_envelope, two_term_prediction, BoundaryCondition, ConstantsError, SemiclassicalParams,
    DEFAULT_ALPHA_FRACTION,
};

/// Aspect range searched for rectangles.
pub const RHO_MIN: f64 = 0.05;
pub const RHO_MAX: f64 = 1.0;
pub const PRESCAN_POINTS: usize = 64;

/// Corner-cut range of the polygon family (the endpoints 0 and 1/2 are squares
/// with degenerate edges).
pub const CUT_MIN: f64 = 0.02;
pub const CUT_MAX: f64 = 0.48;

#[derive(Debug, Error)]
pub enum ShapeOptError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Constants(#[from] ConstantsError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// params = [ρ]: sides 1/√ρ × √ρ.
    Rectangle,
    /// params = [c]: unit square with each corner cut at distance c along both
    /// edges, rescaled to area 1 (regular octagon at c = 1/(2+√2)).
    CornerCutSquare,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub params: Vec<f64>,
    pub objective: f64,
    /// Discretization error bar (FD families only).
    pub error_bar: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationRun {
    pub family: Family,
    pub lambda: f64,
    pub gamma: f64,
    pub bc: BoundaryCondition,
    pub tol: f64,
    /// Objective vanished on the whole pre-scan (λ below every λ₁ of the family).
    pub degenerate: bool,
    pub optimizer_trace: Vec<TraceEntry>,
    pub best: TraceEntry,
}

impl OptimizationRun {
    /// `param,objective,error_bar` rows in evaluation order.
    pub fn write_trace_csv<W: Write>(&self, w: W) -> Result<(), ShapeOptError> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["param", "objective", "error_bar"])?;
        for e in &self.optimizer_trace {
            let bar = e.error_bar.map(|b| format!("{b:.16e}")).unwrap_or_default();
            wr.write_record([format!("{:.16e}", e.params[0]), format!("{:.16e}", e.objective), bar])?;
        }
        wr.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// +1 when larger objectives are better.
fn orientation(bc: BoundaryCondition) -> f64 {
    match bc {
        BoundaryCondition::Dirichlet => 1.0,
        BoundaryCondition::Neumann => -1.0,
    }
}

fn check_common(lambda: f64, gamma: f64, tol: f64) -> Result<(), ShapeOptError> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(ShapeOptError::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(ShapeOptError::InvalidArgument(format!("gamma must be >= 0, got {gamma}")));
    }
    if !(tol > 0.0) {
        return Err(ShapeOptError::InvalidArgument(format!("tol must be positive, got {tol}")));
    }
    Ok(())
}

/// Tr(−Δ−λ)_−^γ on the rectangle of aspect ρ and the given area.
pub fn rectangle_objective(
    rho: f64,
    area: f64,
    lambda: f64,
    gamma: f64,
    bc: BoundaryCondition,
) -> Result<f64, ShapeOptError> {
    if !(rho > 0.0 && area > 0.0) {
        return Err(ShapeOptError::InvalidArgument(format!("need rho > 0 and area > 0, got {rho}, {area}")));
    }
    let s = area.sqrt();
    let spec = rectangle_spectrum(s / rho.sqrt(), s * rho.sqrt(), bc, lambda)?;
    Ok(riesz_mean(&spec, lambda, gamma)?)
}

/// Pre-scan on `n` uniform points of [lo, hi], then golden-section on the
/// bracket of neighbours around the best scan point until it is narrower than tol.
fn scan_and_refine<F>(lo: f64, hi: f64, n: usize, tol: f64, sign: f64, eval: F) -> Result<(Vec<TraceEntry>, bool), ShapeOptError>
where
    F: Fn(f64) -> Result<TraceEntry, ShapeOptError>,
{
    let mut trace = Vec::new();
    let xs: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    for &x in &xs {
        trace.push(eval(x)?);
    }
    let degenerate = trace.iter().all(|e| e.objective == 0.0);
    if degenerate {
        return Ok((trace, true));
    }
    let mut i_best = 0;
    for (i, e) in trace.iter().enumerate() {
        if sign * e.objective > sign * trace[i_best].objective {
            i_best = i;
        }
    }
    let (mut a, mut b) = (xs[i_best.saturating_sub(1)], xs[(i_best + 1).min(n - 1)]);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    let max_iter = 200;
    for _ in 0..max_iter {
        if b - a <= tol {
            break;
        }
        if sign * fc.objective >= sign * fd.objective {
            b = d;
            d = c;
            trace.push(fd);
            fd = fc;
            c = b - r * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            trace.push(fc);
            fc = fd;
            d = a + r * (b - a);
            fd = eval(d)?;
        }
    }
    trace.push(fc);
    trace.push(fd);
    Ok((trace, false))
}

fn pick_best(trace: &[TraceEntry], sign: f64) -> TraceEntry {
    let mut best = &trace[0];
    for e in trace {
        if sign * e.objective > sign * best.objective {
            best = e;
        }
    }
    best.clone()
}

/// Optimal unit-area rectangle aspect ρ ∈ [0.05, 1] at energy λ.
pub fn optimize_rectangle(lambda: f64, gamma: f64, bc: BoundaryCondition, tol: f64) -> Result<OptimizationRun, ShapeOptError> {
    check_common(lambda, gamma, tol)?;
    let sign = orientation(bc);
    let eval = |rho: f64| {
        Ok(TraceEntry { params: vec![rho], objective: rectangle_objective(rho, 1.0, lambda, gamma, bc)?, error_bar: None })
    };
    let (trace, degenerate) = scan_and_refine(RHO_MIN, RHO_MAX, PRESCAN_POINTS, tol, sign, eval)?;
    let best = pick_best(&trace, sign);
    Ok(OptimizationRun { family: Family::Rectangle, lambda, gamma, bc, tol, degenerate, optimizer_trace: trace, best })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub lambda: f64,
    pub best_aspect: f64,
    pub symmetry_gap: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub gamma: f64,
    pub bc: BoundaryCondition,
    pub rows: Vec<ConvergenceRow>,
    /// Trend check only: gaps weakly decrease along the λ ladder.
    pub gaps_nonincreasing: bool,
}

/// Tolerance used by the convergence study.
pub const STUDY_TOL: f64 = 1e-6;

pub fn optimizer_convergence_study(lambdas: &[f64], gamma: f64, bc: BoundaryCondition) -> Result<ConvergenceStudy, ShapeOptError> {
    if lambdas.windows(2).any(|w| w[1] < w[0]) {
        return Err(ShapeOptError::InvalidArgument("lambdas must be nondecreasing".into()));
    }
    let rows = lambdas
        .par_iter()
        .map(|&lam| {
            let run = optimize_rectangle(lam, gamma, bc, STUDY_TOL)?;
            let rho = run.best.params[0];
            Ok(ConvergenceRow { lambda: lam, best_aspect: rho, symmetry_gap: (rho - 1.0).abs(), objective: run.best.objective })
        })
        .collect::<Result<Vec<_>, ShapeOptError>>()?;
    let gaps_nonincreasing = rows.windows(2).all(|w| w[1].symmetry_gap <= w[0].symmetry_gap);
    Ok(ConvergenceStudy { gamma, bc, rows, gaps_nonincreasing })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankingCheck {
    pub pairs: usize,
    /// Pairs whose predicted gap exceeds the sum of their error envelopes.
    pub qualifying: usize,
    /// Qualifying pairs ranked differently by prediction and exact objective.
    pub disagreements: usize,
    /// Fraction of all pairs on which the rankings agree (informational).
    pub agreement_all_pairs: f64,
}

/// Compares the two-term ranking of candidate rectangles with the exact one.
pub fn two_term_ranking_check(
    lambda: f64,
    gamma: f64,
    bc: BoundaryCondition,
    aspects: &[f64],
) -> Result<RankingCheck, ShapeOptError> {
    check_common(lambda, gamma, 1.0)?;
    let p = SemiclassicalParams::new(gamma, 2)?;
    let alpha = envelope_alpha(gamma, DEFAULT_ALPHA_FRACTION);
    let rows = aspects
        .iter()
        .map(|&rho| {
            let (a, b) = (1.0 / rho.sqrt(), rho.sqrt());
            let per = 2.0 * (a + b);
            let exact = rectangle_objective(rho, 1.0, lambda, gamma, bc)?;
            let pred = two_term_prediction(lambda, p, 1.0, per, bc);
            let env = error_envelope(lambda, gamma, per, 0.5 * a.min(b), 2, bc, alpha);
            Ok((exact, pred, env))
        })
        .collect::<Result<Vec<_>, ShapeOptError>>()?;
    let (mut pairs, mut qualifying, mut disagreements, mut agree) = (0, 0, 0, 0);
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let (ei, pi, vi) = rows[i];
            let (ej, pj, vj) = rows[j];
            pairs += 1;
            let same = (pi - pj).signum() == (ei - ej).signum();
            if same {
                agree += 1;
            }
            if (pi - pj).abs() > vi + vj {
                qualifying += 1;
                if !same {
                    disagreements += 1;
                }
            }
        }
    }
    let agreement_all_pairs = if pairs == 0 { 1.0 } else { agree as f64 / pairs as f64 };
    Ok(RankingCheck { pairs, qualifying, disagreements, agreement_all_pairs })
}

/// Unit-area corner-cut square with cut parameter c ∈ (0, 1/2).
pub fn corner_cut_square(c: f64) -> Result<ConvexPolygon, ShapeOptError> {
    if !(c > 0.0 && c < 0.5) {
        return Err(ShapeOptError::InvalidArgument(format!("cut must lie in (0, 1/2), got {c}")));
    }
    let s = 1.0 / (1.0 - 2.0 * c * c).sqrt();
    let (l, h) = (c * s, (1.0 - c) * s);
    let e = s;
    Ok(ConvexPolygon::new(vec![[l, 0.0], [h, 0.0], [e, l], [e, h], [h, e], [l, e], [0.0, h], [0.0, l]])?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolygonSearchOptions {
    /// Coarse FD spacing; the fine grid uses h/2.
    pub h: f64,
    pub scan_points: usize,
    pub tol: f64,
}

impl Default for PolygonSearchOptions {
    fn default() -> Self {
        PolygonSearchOptions { h: 0.05, scan_points: 17, tol: 1e-3 }
    }
}

/// Dirichlet Riesz mean of an FD spectrum at spacings h and h/2, Richardson
/// extrapolated; the error bar is the objective change from the fine-grid values.
pub fn fd_objective(poly: &ConvexPolygon, lambda: f64, gamma: f64, h: f64) -> Result<(f64, f64), ShapeOptError> {
    let per = poly.perimeter();
    let mut k = ((lambda * poly.area() + per * lambda.sqrt()) / (4.0 * std::f64::consts::PI)).ceil() as usize + 4;
    loop {
        let coarse = polygon_dirichlet_spectrum_fd(poly, h, k, FdOptions::default())?;
        let fine = polygon_dirichlet_spectrum_fd(poly, 0.5 * h, k, FdOptions::default())?;
        let (extra, _) = richardson(&coarse, &fine);
        if extra.last().is_some_and(|&top| top >= lambda) && fine.eigenvalues().last().is_some_and(|&top| top >= lambda) {
            let term = |e: f64| if e < lambda { (lambda - e).powf(gamma) } else { 0.0 };
            let value: f64 = extra.iter().rev().map(|&e| term(e)).sum();
            let bar: f64 = extra.iter().zip(fine.eigenvalues()).map(|(&e, &f)| (term(e) - term(f)).abs()).sum();
            return Ok((value, bar));
        }
        if k > 4096 {
            return Err(ShapeOptError::InvalidArgument(format!("lambda = {lambda} needs more than {k} FD eigenvalues")));
        }
        k *= 2;
    }
}

/// Experimental: Dirichlet optimization over the corner-cut family with FD spectra.
pub fn optimize_corner_cut(lambda: f64, gamma: f64, opts: PolygonSearchOptions) -> Result<OptimizationRun, ShapeOptError> {
    check_common(lambda, gamma, opts.tol)?;
    if opts.scan_points < 3 {
        return Err(ShapeOptError::InvalidArgument("need at least 3 scan points".into()));
    }
    let bc = BoundaryCondition::Dirichlet;
    let eval = |c: f64| {
        let poly = corner_cut_square(c)?;
        let (objective, bar) = fd_objective(&poly, lambda, gamma, opts.h)?;
        Ok(TraceEntry { params: vec![c], objective, error_bar: Some(bar) })
    };
    let (trace, degenerate) = scan_and_refine(CUT_MIN, CUT_MAX, opts.scan_points, opts.tol, 1.0, eval)?;
    let best = pick_best(&trace, 1.0);
    Ok(OptimizationRun {
        family: Family::CornerCutSquare,
        lambda,
        gamma,
        bc,
        tol: opts.tol,
        degenerate,
        optimizer_trace: trace,
        best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    /// Direct lattice sum, independent of the spectrum machinery.
    fn lattice_objective(rho: f64, lambda: f64, gamma: f64, bc: BoundaryCondition) -> f64 {
        let (a, b) = (1.0 / rho.sqrt(), rho.sqrt());
        let start = if bc == BoundaryCondition::Dirichlet { 1 } else { 0 };
        let mut s = 0.0;
        for m in start..2000u64 {
            let xm = (m as f64 * PI / a).powi(2);
            if xm >= lambda {
                break;
            }
            for n in start..2000u64 {
                let l = xm + (n as f64 * PI / b).powi(2);
                if l >= lambda {
                    break;
                }
                s += (lambda - l).powf(gamma);
            }
        }
        s
    }

    #[test]
    fn objective_matches_lattice_sum_and_is_reciprocal_symmetric() {
        for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Neumann] {
            for &rho in &[0.05, 0.3, 0.77, 1.0] {
                let got = rectangle_objective(rho, 1.0, 400.0, 1.0, bc).unwrap();
                let want = lattice_objective(rho, 400.0, 1.0, bc);
                assert!((got - want).abs() <= 1e-11 * want.max(1.0), "{bc:?} {rho}: {got} vs {want}");
                let flip = rectangle_objective(1.0 / rho, 1.0, 400.0, 1.0, bc).unwrap();
                assert!((flip - got).abs() <= 1e-11 * got.max(1.0));
            }
        }
    }

    #[test]
    fn just_above_ground_state_prefers_the_square() {
        let lam1 = 2.0 * PI * PI;
        let run = optimize_rectangle(lam1 * 1.001, 1.0, BoundaryCondition::Dirichlet, 1e-8).unwrap();
        assert!(!run.degenerate);
        assert!((run.best.params[0] - 1.0).abs() < 1e-3, "{:?}", run.best);
        let sign = orientation(run.bc);
        assert!(run.optimizer_trace.iter().all(|e| sign * run.best.objective >= sign * e.objective));
    }

    #[test]
    fn degenerate_below_ground_state() {
        let run = optimize_rectangle(10.0, 1.0, BoundaryCondition::Dirichlet, 1e-6).unwrap();
        assert!(run.degenerate);
        assert_eq!(run.optimizer_trace.len(), PRESCAN_POINTS);
        assert!(optimize_rectangle(-1.0, 1.0, BoundaryCondition::Dirichlet, 1e-6).is_err());
        assert!(optimize_rectangle(100.0, 1.0, BoundaryCondition::Dirichlet, 0.0).is_err());
    }

    #[test]
    fn neumann_runs_minimize() {
        let run = optimize_rectangle(300.0, 1.0, BoundaryCondition::Neumann, 1e-6).unwrap();
        assert!(run.optimizer_trace.iter().all(|e| run.best.objective <= e.objective));
    }

    #[test]
    fn runs_are_deterministic() {
        let a = optimize_rectangle(300.0, 1.0, BoundaryCondition::Dirichlet, 1e-7).unwrap();
        let b = optimize_rectangle(300.0, 1.0, BoundaryCondition::Dirichlet, 1e-7).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let s = optimizer_convergence_study(&[300.0, 300.0], 1.0, BoundaryCondition::Dirichlet).unwrap();
        assert_eq!(s.rows[0], s.rows[1]);
        assert!(s.gaps_nonincreasing);
        assert!(optimizer_convergence_study(&[300.0, 100.0], 1.0, BoundaryCondition::Dirichlet).is_err());
    }

    #[test]
    fn trace_csv_has_one_row_per_evaluation() {
        let run = optimize_rectangle(100.0, 1.0, BoundaryCondition::Dirichlet, 1e-4).unwrap();
        let mut buf = Vec::new();
        run.write_trace_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + run.optimizer_trace.len());
    }

    #[test]
    fn ranking_check_has_no_qualified_disagreements() {
        let aspects: Vec<f64> = (0..12).map(|i| 0.05 + 0.95 * i as f64 / 11.0).collect();
        for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Neumann] {
            let r = two_term_ranking_check(2000.0, 1.0, bc, &aspects).unwrap();
            assert_eq!(r.pairs, 66);
            assert_eq!(r.disagreements, 0);
            assert!(r.agreement_all_pairs > 0.5, "{r:?}");
        }
    }

    #[test]
    fn corner_cut_family_has_unit_area() {
        for &c in &[CUT_MIN, 0.1, 1.0 / (2.0 + 2f64.sqrt()), CUT_MAX] {
            let p = corner_cut_square(c).unwrap();
            assert!((p.area() - 1.0).abs() < 1e-13);
            assert_eq!(p.len(), 8);
        }
        // regular octagon: all sides equal
        let p = corner_cut_square(1.0 / (2.0 + 2f64.sqrt())).unwrap();
        let sides: Vec<f64> = p.edges().map(|(a, b)| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()).collect();
        assert!(sides.iter().all(|s| (s - sides[0]).abs() < 1e-12));
        assert!(corner_cut_square(0.5).is_err());
    }

    #[test]
    fn corner_cut_search_reports_error_bars() {
        let opts = PolygonSearchOptions { h: 0.05, scan_points: 5, tol: 0.05 };
        let run = optimize_corner_cut(60.0, 1.0, opts).unwrap();
        assert!(run.optimizer_trace.iter().all(|e| e.error_bar.is_some_and(|b| b.is_finite() && b >= 0.0)));
        assert!(run.optimizer_trace.iter().all(|e| run.best.objective >= e.objective));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        /// Area-A problem at energy λ equals the area-1 problem at A·λ, scaled by A^{−γ}.
        #[test]
        fn area_scaling_law(rho in 0.05f64..1.0, area in 0.2f64..5.0, lambda in 50.0f64..800.0, gamma in 0.0f64..2.5) {
            for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Neumann] {
                let lhs = rectangle_objective(rho, area, lambda, gamma, bc).unwrap();
                let rhs = area.powf(-gamma) * rectangle_objective(rho, 1.0, area * lambda, gamma, bc).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0), "{} vs {}", lhs, rhs);
            }
        }
    }
}
