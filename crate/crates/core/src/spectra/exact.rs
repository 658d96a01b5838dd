//! Separable spectra: rectangles (lattice enumeration) and disks (Bessel zeros).

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Domain, SpectraError, Spectrum};
use crate::special::{bessel_j_prime, bisect, BesselZeros, SpecialError};
use crate::weyl_constants::BoundaryCondition;

/// Upper limit on enumerated eigenvalues (memory guard).
pub const MAX_ENUMERATED: usize = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectangleMode {
    pub lambda: f64,
    pub m: usize,
    pub n: usize,
}

fn check_lambda_max(lambda_max: f64) -> Result<(), SpectraError> {
    if !(lambda_max > 0.0 && lambda_max.is_finite()) {
        return Err(SpectraError::InvalidArgument(format!("lambda_max must be positive, got {lambda_max}")));
    }
    Ok(())
}

/// All modes π²(m²/a² + n²/b²) < lambda_max, sorted by eigenvalue.
/// Indices start at 1 (Dirichlet) or 0 (Neumann).
pub fn rectangle_modes(a: f64, b: f64, bc: BoundaryCondition, lambda_max: f64) -> Result<Vec<RectangleMode>, SpectraError> {
    Domain::rectangle(a, b)?;
    check_lambda_max(lambda_max)?;
    // Weyl count plus boundary term as a size estimate
    let est = lambda_max * a * b / (4.0 * PI) + lambda_max.sqrt() * (a + b) / PI + 1.0;
    if est > MAX_ENUMERATED as f64 {
        return Err(SpectraError::Capacity { needed: est, cap: MAX_ENUMERATED });
    }
    let start = match bc {
        BoundaryCondition::Dirichlet => 1usize,
        BoundaryCondition::Neumann => 0usize,
    };
    let (pa, pb) = ((PI / a).powi(2), (PI / b).powi(2));
    let mut modes = Vec::with_capacity(est as usize + 16);
    let mut m = start;
    loop {
        let xm = pa * (m * m) as f64;
        if xm >= lambda_max {
            break;
        }
        let mut n = start;
        loop {
            let lam = xm + pb * (n * n) as f64;
            if lam >= lambda_max {
                break;
            }
            modes.push(RectangleMode { lambda: lam, m, n });
            n += 1;
        }
        m += 1;
    }
    modes.par_sort_unstable_by(|x, y| x.lambda.total_cmp(&y.lambda).then(x.m.cmp(&y.m)));
    Ok(modes)
}

/// Exact rectangle spectrum on [0, a] × [0, b], complete below `lambda_max`.
pub fn rectangle_spectrum(a: f64, b: f64, bc: BoundaryCondition, lambda_max: f64) -> Result<Spectrum, SpectraError> {
    let ev = rectangle_modes(a, b, bc, lambda_max)?.into_iter().map(|m| m.lambda).collect();
    Spectrum::new(ev, bc, lambda_max, Domain::rectangle(a, b)?, true)
}

/// Exact disk spectrum: (j/R)² for Bessel zeros j < R√lambda_max (derivative zeros
/// for Neumann), angular multiplicity 2 for ν >= 1.
pub fn disk_spectrum(radius: f64, bc: BoundaryCondition, lambda_max: f64) -> Result<Spectrum, SpectraError> {
    let domain = Domain::disk(radius)?;
    check_lambda_max(lambda_max)?;
    let zmax = radius * lambda_max.sqrt();
    let est = lambda_max * PI * radius * radius / (4.0 * PI) + 2.0 * zmax + 1.0;
    if est > MAX_ENUMERATED as f64 {
        return Err(SpectraError::Capacity { needed: est, cap: MAX_ENUMERATED });
    }
    let mut table = BesselZeros::new();
    let mut values: Vec<f64> = Vec::new();
    let scale = 1.0 / (radius * radius);
    match bc {
        BoundaryCondition::Dirichlet => {
            let mut nu = 0;
            loop {
                let zs = table.ensure_beyond(nu, zmax)?;
                if zs[0] >= zmax {
                    break;
                }
                let mult = if nu == 0 { 1 } else { 2 };
                for &z in zs.iter().take_while(|&&z| z < zmax) {
                    for _ in 0..mult {
                        values.push(z * z * scale);
                    }
                }
                nu += 1;
            }
        }
        BoundaryCondition::Neumann => {
            values.push(0.0);
            // ν = 0: J_0' = −J_1
            for &z in table.ensure_beyond(1, zmax)?.iter().take_while(|&&z| z < zmax) {
                values.push(z * z * scale);
            }
            // ν >= 1: the first zero of J_ν' exceeds ν
            let mut nu = 1;
            while (nu as f64) < zmax {
                let zs = table.ensure_beyond(nu, zmax)?.to_vec();
                let mut brackets = Vec::with_capacity(zs.len());
                let mut lo = nu as f64;
                for &hi in &zs {
                    if lo >= zmax {
                        break;
                    }
                    brackets.push((lo, hi));
                    lo = hi;
                }
                let found: Vec<Result<f64, SpecialError>> = brackets
                    .par_iter()
                    .enumerate()
                    .map(|(k, &(lo, hi))| {
                        bisect(|x| bessel_j_prime(nu, x), lo, hi).ok_or(SpecialError::Bracket { nu, k: k + 1 })
                    })
                    .collect();
                let mut any = false;
                for z in found {
                    let z = z?;
                    if z < zmax {
                        values.push(z * z * scale);
                        values.push(z * z * scale);
                        any = true;
                    }
                }
                if !any {
                    break;
                }
                nu += 1;
            }
        }
    }
    values.par_sort_unstable_by(f64::total_cmp);
    Spectrum::new(values, bc, lambda_max, domain, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rectangle_examples() {
        let d = rectangle_spectrum(1.0, 1.0, BoundaryCondition::Dirichlet, 50.0).unwrap();
        assert_eq!(d.eigenvalues().len(), 3);
        assert!((d.eigenvalues()[1] - 5.0 * PI * PI).abs() < 1e-12);
        assert!(rectangle_spectrum(1.0, 1.0, BoundaryCondition::Dirichlet, 1e12).is_err());
        assert!(rectangle_spectrum(-1.0, 1.0, BoundaryCondition::Dirichlet, 10.0).is_err());
    }

    #[test]
    fn disk_examples() {
        let d = disk_spectrum(1.0, BoundaryCondition::Dirichlet, 100.0).unwrap();
        assert!((d.eigenvalues()[0] - 2.404_825_557_695_773f64.powi(2)).abs() < 1e-10);
        let j11 = 3.831_705_970_207_512f64.powi(2);
        let mult = d.eigenvalues().iter().filter(|&&v| (v - j11).abs() < 1e-8).count();
        assert_eq!(mult, 2);
        let n = disk_spectrum(1.0, BoundaryCondition::Neumann, 100.0).unwrap();
        assert_eq!(n.eigenvalues()[0], 0.0);
        // j'_{1,1} = 1.8411837813406593, double
        assert!((n.eigenvalues()[1] - 1.841_183_781_340_659f64.powi(2)).abs() < 1e-10);
        assert!((n.eigenvalues()[2] - n.eigenvalues()[1]).abs() < 1e-14);
    }

    #[test]
    fn disk_counts_follow_weyl() {
        // N(λ) ≈ λ/4 ∓ √λ/2 for the unit disk
        for (bc, sign) in [(BoundaryCondition::Dirichlet, -1.0), (BoundaryCondition::Neumann, 1.0)] {
            let lam = 20_000.0;
            let s = disk_spectrum(1.0, bc, lam).unwrap();
            let n = s.eigenvalues().len() as f64;
            let pred = lam / 4.0 + sign * lam.sqrt() / 2.0;
            assert!((n - pred).abs() < 0.02 * lam.sqrt() * 10.0, "{bc:?}: {n} vs {pred}");
        }
    }
}
