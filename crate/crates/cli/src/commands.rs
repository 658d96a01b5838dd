use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};

use anyhow::{Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};
use weylab::convex_geometry::ConvexPolygon;
use weylab::shape_opt::{optimize_corner_cut, optimize_rectangle, OptimizationRun, PolygonSearchOptions};
use weylab::spectra::io::write_spectrum;
use weylab::spectra::{
    disk_spectrum, heat_trace, polygon_dirichlet_spectrum_fd, rectangle_spectrum, riesz_mean, Domain, FdOptions,
    SpectraError, Spectrum,
};
use weylab::tauberian::{
    build_mollifier, build_phi_hierarchy, majorant_check, tauberian_order_check, verify_iterated_identity_with,
    AtomicMeasure, MollifierKind,
};
use weylab::weyl_constants::{
    corner_sum, envelope_alpha, error_envelope, heat_polygon_error_bound, heat_polygon_prediction,
    heat_two_term_prediction, lt_constant, neumann_heat_envelope, two_term_prediction, BoundaryCondition,
    SemiclassicalParams, DEFAULT_ALPHA_FRACTION,
};

use crate::args::*;

/// Spectrum complete below `lambda_max`; polygons go through the FD solver.
pub fn spectrum_for(domain: &Domain, bc: BoundaryCondition, lambda_max: f64, grid_h: Option<f64>) -> Result<Spectrum> {
    if !(lambda_max > 0.0 && lambda_max.is_finite()) {
        return Err(invalid(format!("lambda_max must be positive, got {lambda_max}")));
    }
    match domain {
        Domain::Rectangle { a, b } => Ok(rectangle_spectrum(*a, *b, bc, lambda_max)?),
        Domain::Disk { radius } => Ok(disk_spectrum(*radius, bc, lambda_max)?),
        Domain::ConvexPolygon(poly) => {
            if bc != BoundaryCondition::Dirichlet {
                return Err(invalid("polygon spectra are available for Dirichlet conditions only"));
            }
            let h = grid_h.ok_or_else(|| invalid("polygon domains need --grid-h"))?;
            if !(h > 0.0) {
                return Err(invalid(format!("--grid-h must be positive, got {h}")));
            }
            let mut k = ((lambda_max * poly.area() + poly.perimeter() * lambda_max.sqrt()) / (4.0 * PI)).ceil() as usize + 8;
            loop {
                let spec = polygon_dirichlet_spectrum_fd(poly, h, k, FdOptions::default())?;
                if spec.complete_below() >= lambda_max {
                    return Ok(spec);
                }
                k *= 2;
            }
        }
    }
}

fn geometry_of(domain: &Domain) -> (f64, f64, f64) {
    (domain.area(), domain.perimeter(), domain.inradius())
}

pub fn constants(a: &ConstantsArgs) -> Result<Value> {
    let mut rows = Vec::new();
    for &d in &a.dim {
        for &g in &a.gamma {
            let p = SemiclassicalParams::new(g, d).map_err(|e| invalid(e.to_string()))?;
            rows.push(json!({"gamma": g, "dim": d, "L": lt_constant(p)}));
        }
    }
    Ok(json!({ "rows": rows }))
}

pub fn spectrum(a: &SpectrumArgs) -> Result<Value> {
    let domain = parse_domain(&a.domain)?;
    let spec = spectrum_for(&domain, a.bc, a.lambda_max, a.grid_h)?;
    if let Some(path) = &a.spectrum_out {
        let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(f);
        write_spectrum(&spec, &mut w)?;
        w.flush()?;
    }
    let ev = spec.eigenvalues();
    Ok(json!({
        "domain": domain,
        "count": ev.len(),
        "complete_below": spec.complete_below(),
        "exact": spec.exact(),
        "lowest": &ev[..ev.len().min(10)],
    }))
}

/// Rows of (λ, Tr, two-term prediction, remainder/λ^γ, envelope) shared by the
/// weyl and polygon checks.
fn remainder_rows(a: &WeylArgs) -> Result<(Domain, Vec<Value>, Vec<f64>)> {
    let domain = parse_domain(&a.domain)?;
    let params = SemiclassicalParams::new(a.gamma, 2).map_err(|e| invalid(e.to_string()))?;
    let top = *a.lambda.0.last().unwrap();
    let spec = spectrum_for(&domain, a.bc, top, a.grid_h)?;
    let (area, per, r_in) = geometry_of(&domain);
    let alpha = envelope_alpha(a.gamma, DEFAULT_ALPHA_FRACTION);
    let rows: Vec<(Value, f64)> = a
        .lambda
        .0
        .par_iter()
        .map(|&lam| {
            let tr = riesz_mean(&spec, lam, a.gamma)?;
            let pred = two_term_prediction(lam, params, area, per, a.bc);
            let rem = tr - pred;
            let env = error_envelope(lam, a.gamma, per, r_in, 2, a.bc, alpha);
            let scaled = rem / lam.powf(a.gamma);
            Ok((
                json!({
                    "lambda": lam,
                    "riesz_mean": tr,
                    "two_term": pred,
                    "remainder": rem,
                    "remainder_over_lambda_gamma": scaled,
                    "envelope": env,
                    "within_unit_envelope": rem.abs() <= env,
                }),
                scaled,
            ))
        })
        .collect::<Result<_, SpectraError>>()?;
    let (rows, scaled) = rows.into_iter().unzip();
    Ok((domain, rows, scaled))
}

pub fn weyl_check(a: &WeylArgs) -> Result<Value> {
    let (domain, rows, scaled) = remainder_rows(a)?;
    let mean = scaled.iter().sum::<f64>() / scaled.len() as f64;
    let corner = domain.angles().map(|ang| corner_sum(&ang)).transpose()?;
    Ok(json!({
        "domain": domain,
        "rows": rows,
        "mean_remainder_over_lambda_gamma": mean,
        "corner_sum": corner,
    }))
}

pub fn polygon_check(a: &WeylArgs) -> Result<Value> {
    let (domain, rows, scaled) = remainder_rows(a)?;
    let angles = domain.angles().ok_or_else(|| invalid("polygon-check needs a polygonal domain"))?;
    let predicted = corner_sum(&angles)?;
    let mean = scaled.iter().sum::<f64>() / scaled.len() as f64;
    Ok(json!({
        "domain": domain,
        "rows": rows,
        "third_term_estimate": mean,
        "third_term_predicted": predicted,
        "relative_deviation": (mean - predicted).abs() / predicted.abs(),
    }))
}

pub fn heat_check(a: &HeatArgs) -> Result<Value> {
    if !(a.tol > 0.0) {
        return Err(invalid(format!("--tol must be positive, got {}", a.tol)));
    }
    let domain = parse_domain(&a.domain)?;
    if matches!(domain, Domain::ConvexPolygon(_)) {
        return Err(invalid("heat-check needs an exactly solvable domain (rectangle or disk)"));
    }
    let (area, per, r_in) = geometry_of(&domain);
    let t_min = a.t.0[0];
    // tail ~ t⁻¹ (tΛ) e^{−tΛ}: start from tΛ = ln(1/tol) + 10 and grow until certified
    let mut lam_max = ((1.0 / a.tol).ln() + 10.0) / t_min;
    let spec = loop {
        let spec = spectrum_for(&domain, a.bc, lam_max, None)?;
        match heat_trace(&spec, t_min, area, Some(a.tol)) {
            Ok(_) => break spec,
            Err(SpectraError::TailTooLarge { .. }) => lam_max *= 1.5,
            Err(e) => return Err(e.into()),
        }
    };
    let polygon = domain.as_polygon();
    let corner = polygon.as_ref().map(|p| p.corner_params());
    let mut rows = Vec::new();
    for &t in &a.t.0 {
        let ht = heat_trace(&spec, t, area, Some(a.tol))?;
        let brown = heat_two_term_prediction(t, 2, area, per, a.bc);
        let mut row = json!({
            "t": t,
            "heat_trace": ht.value,
            "tail_bound": ht.tail_bound,
            "two_term": brown,
            "two_term_residual": ht.value - brown,
        });
        match (a.bc, &polygon, &corner) {
            (BoundaryCondition::Dirichlet, Some(p), Some(c)) => {
                let pred = heat_polygon_prediction(t, area, per, p.angles())?;
                let bound = heat_polygon_error_bound(t, area, c.r, p.angles())?;
                let res = ht.value - pred;
                row["polygon_prediction"] = json!(pred);
                row["polygon_residual"] = json!(res);
                row["polygon_bound"] = json!(bound);
                row["within_polygon_bound"] = json!(res.abs() <= bound + ht.tail_bound);
            }
            (BoundaryCondition::Neumann, _, _) => {
                let env = neumann_heat_envelope(t, per, r_in, 2, 0.1);
                row["neumann_envelope"] = json!(env);
                row["within_unit_envelope"] = json!((ht.value - brown).abs() <= env);
            }
            _ => {}
        }
        rows.push(row);
    }
    Ok(json!({ "domain": domain, "lambda_max": spec.complete_below(), "rows": rows }))
}

pub fn pointwise_check(a: &PointwiseArgs) -> Result<Value> {
    let domain = parse_domain(&a.domain)?;
    let Domain::Rectangle { a: w, b: h } = domain else {
        return Err(invalid("pointwise-check needs a rectangle"));
    };
    let x = match &a.point {
        Some(p) => [p[0], p[1]],
        None => [0.5 * w, 0.5 * h],
    };
    let r = tauberian_order_check(&domain, a.bc, x, a.gamma, &a.lambda.0).map_err(|e| match e {
        weylab::tauberian::TauberianError::InsufficientRange { .. } | weylab::tauberian::TauberianError::InvalidArgument(_) => {
            invalid(e.to_string())
        }
        other => other.into(),
    })?;
    Ok(serde_json::to_value(r)?)
}

/// Atomic test measures used by the identity demo (and the acceptance suite).
pub fn demo_measures() -> Vec<AtomicMeasure> {
    vec![
        AtomicMeasure::atoms_only(vec![(1.0, 1.0)]).unwrap(),
        AtomicMeasure::atoms_only(vec![(0.5, 1.0), (1.3, 2.0), (2.2, 0.5)]).unwrap(),
        AtomicMeasure::atoms_only(vec![(0.0, 1.0), (0.7, 1.0), (1.9, 3.0)]).unwrap(),
    ]
}

pub fn tauberian_demo(a: &TauberianArgs) -> Result<Value> {
    if a.m_max == 0 {
        return Err(invalid("--m-max must be at least 1"));
    }
    let fam = build_mollifier(MollifierKind::BumpSquared);
    let depth = a.depth.max(a.m_max + 1);
    let mut per_eps = Vec::new();
    for &eps in &a.eps {
        let h = build_phi_hierarchy(&fam, eps, depth).map_err(|e| invalid(e.to_string()))?;
        let b: Vec<Value> =
            (0..=depth).map(|m| json!({"m": m, "recursion": h.b(m), "closed_form": h.b_closed_form(m)})).collect();
        let parity: Vec<f64> = (0..=depth).map(|k| h.parity_defect(k)).collect();
        let mut identity = Vec::new();
        for (i, mu) in demo_measures().iter().enumerate() {
            for m in 1..=a.m_max {
                for &tau in &a.tau {
                    let r = verify_iterated_identity_with(mu, m, tau, &h)?;
                    identity.push(json!({"measure": i, "report": r}));
                }
            }
        }
        per_eps.push(json!({
            "eps": eps,
            "b": b,
            "parity_defects": parity,
            "majorants": majorant_check(&h),
            "identity": identity,
        }));
    }
    Ok(json!({ "mollifier": fam.invariants(), "depth": depth, "hierarchies": per_eps }))
}

fn polygon_report(p: &ConvexPolygon) -> Result<Value> {
    let r_in = p.inradius();
    let (center, _) = p.chebyshev_center();
    let per = p.perimeter();
    let mut level_defect: f64 = 0.0;
    let mut layer_violations = 0;
    for i in 1..=9 {
        let s = r_in * i as f64 / 10.0;
        let v = p.distance_level_volume(s)?;
        level_defect = level_defect.max((v + p.inner_parallel_area(s)? - p.area()).abs());
        if v > s * per * (1.0 + 1e-12) {
            layer_violations += 1;
        }
    }
    let radii: Vec<f64> = (1..=40).map(|i| 2.0 * r_in * 1.15f64.powi(i) / 1.15f64.powi(20)).collect();
    let bishop_gromov_ok = p.bishop_gromov_profile(center, &radii).is_ok();
    let steiner_ok = (0..=10).all(|i| {
        let r = r_in * i as f64 / 5.0;
        p.minkowski_ball_area(r).map(|v| p.steiner_bounds(r, 1.0).contains(v, 1e-12)).unwrap_or(false)
    });
    let corner = p.corner_params();
    Ok(json!({
        "vertices": p.vertices(),
        "area": p.area(),
        "perimeter": per,
        "inradius": r_in,
        "chebyshev_center": center,
        "theta_omega": p.theta_omega(),
        "alpha_min": corner.alpha_min,
        "corner_radius": corner.r,
        "level_set_identity_defect": level_defect,
        "boundary_layer_violations": layer_violations,
        "bishop_gromov_monotone": bishop_gromov_ok,
        "steiner_bounds_hold": steiner_ok,
    }))
}

pub fn geometry(a: &GeometryArgs, seed: u64) -> Result<Value> {
    let polys: Vec<ConvexPolygon> = match &a.domain {
        Some(s) => {
            let d = parse_domain(s)?;
            vec![d.as_polygon().ok_or_else(|| invalid("geometry needs a polygonal domain"))?]
        }
        None => {
            if a.count == 0 || a.vertices < 3 {
                return Err(invalid("need --count >= 1 and --vertices >= 3"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..a.count).map(|_| ConvexPolygon::random(&mut rng, a.vertices)).collect()
        }
    };
    let reports = polys.par_iter().map(polygon_report).collect::<Result<Vec<_>>>()?;
    let violations: u64 = reports.iter().map(|r| r["boundary_layer_violations"].as_u64().unwrap_or(0)).sum();
    let max_defect = reports.iter().map(|r| r["level_set_identity_defect"].as_f64().unwrap_or(0.0)).fold(0.0, f64::max);
    let all_bg = reports.iter().all(|r| r["bishop_gromov_monotone"] == json!(true));
    let all_steiner = reports.iter().all(|r| r["steiner_bounds_hold"] == json!(true));
    Ok(json!({
        "polygons": reports,
        "summary": {
            "count": polys.len(),
            "boundary_layer_violations": violations,
            "max_level_set_identity_defect": max_defect,
            "bishop_gromov_monotone": all_bg,
            "steiner_bounds_hold": all_steiner,
        }
    }))
}

pub fn shape_opt(a: &ShapeOptArgs) -> Result<Value> {
    if !(a.tol > 0.0) {
        return Err(invalid(format!("--tol must be positive, got {}", a.tol)));
    }
    if a.experimental && a.bc != BoundaryCondition::Dirichlet {
        return Err(invalid("the experimental polygon family supports Dirichlet conditions only"));
    }
    let runs: Vec<OptimizationRun> = a
        .lambda
        .0
        .par_iter()
        .map(|&lam| {
            if a.experimental {
                let opts = PolygonSearchOptions { h: a.grid_h, tol: a.tol.max(1e-4), ..Default::default() };
                optimize_corner_cut(lam, a.gamma, opts)
            } else {
                optimize_rectangle(lam, a.gamma, a.bc, a.tol)
            }
        })
        .collect::<Result<_, _>>()?;
    if let Some(path) = &a.trace_csv {
        let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(f);
        writeln!(w, "lambda,param,objective,error_bar")?;
        for r in &runs {
            for e in &r.optimizer_trace {
                let bar = e.error_bar.map(|b| format!("{b:.16e}")).unwrap_or_default();
                writeln!(w, "{:.16e},{:.16e},{:.16e},{bar}", r.lambda, e.params[0], e.objective)?;
            }
        }
        w.flush()?;
    }
    // the symmetric member: ρ = 1 for rectangles, the regular octagon for the cut family
    let symmetric = if a.experimental { 1.0 / (2.0 + 2f64.sqrt()) } else { 1.0 };
    let gaps: Vec<f64> = runs.iter().map(|r| (r.best.params[0] - symmetric).abs()).collect();
    let summary: Vec<Value> = runs
        .iter()
        .zip(&gaps)
        .map(|(r, g)| json!({"lambda": r.lambda, "best_param": r.best.params[0], "objective": r.best.objective, "symmetry_gap": g, "degenerate": r.degenerate}))
        .collect();
    Ok(json!({
        "summary": summary,
        "gaps_nonincreasing": gaps.windows(2).all(|w| w[1] <= w[0]),
        "runs": runs,
    }))
}
