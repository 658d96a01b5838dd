//! Five-point finite-difference Dirichlet Laplacian on convex polygons.
//!
//! Unknowns are the grid points strictly inside the polygon (zero extension
//! outside). The lowest eigenvalues come from Lanczos on A⁻¹ (shift–invert at 0)
//! with full reorthogonalization; converged pairs are locked and the iteration
//! restarts in their orthogonal complement, which also recovers degenerate
//! eigenvalues. A⁻¹ is applied through a banded Cholesky factor — row-major
//! ordering keeps the bandwidth at about one grid row.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Domain, SpectraError, Spectrum};
use crate::convex_geometry::{ConvexPolygon, Point};
use crate::weyl_constants::BoundaryCondition;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdOptions {
    /// Residual tolerance relative to ‖A‖.
    pub rel_tol: f64,
    /// Seed of the Lanczos start vectors.
    pub seed: u64,
}

impl Default for FdOptions {
    fn default() -> Self {
        FdOptions { rel_tol: 1e-9, seed: 0x5eed }
    }
}

/// Sparse symmetric 5-point operator on the interior grid points.
#[derive(Debug, Clone)]
pub struct GridLaplacian {
    pub h: f64,
    pub points: Vec<Point>,
    /// Up to four neighbor indices per unknown.
    neighbors: Vec<[usize; 4]>,
    n_neighbors: Vec<u8>,
    bandwidth: usize,
}

impl GridLaplacian {
    pub fn new(poly: &ConvexPolygon, h: f64) -> Self {
        let vs = poly.vertices();
        let xmin = vs.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        let xmax = vs.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
        let ymin = vs.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
        let ymax = vs.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max);
        let nx = ((xmax - xmin) / h).ceil() as usize + 1;
        let ny = ((ymax - ymin) / h).ceil() as usize + 1;
        let tol = 1e-9 * h;
        let mut index = vec![usize::MAX; nx * ny];
        let mut points = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                let p = [xmin + i as f64 * h, ymin + j as f64 * h];
                if poly.dist_to_boundary(p) > tol {
                    index[j * nx + i] = points.len();
                    points.push(p);
                }
            }
        }
        let mut neighbors = vec![[0usize; 4]; points.len()];
        let mut n_neighbors = vec![0u8; points.len()];
        let mut bandwidth = 0;
        for j in 0..ny {
            for i in 0..nx {
                let k = index[j * nx + i];
                if k == usize::MAX {
                    continue;
                }
                let cand = [
                    (i > 0).then(|| j * nx + i - 1),
                    (i + 1 < nx).then(|| j * nx + i + 1),
                    (j > 0).then(|| (j - 1) * nx + i),
                    (j + 1 < ny).then(|| (j + 1) * nx + i),
                ];
                for c in cand.into_iter().flatten() {
                    let q = index[c];
                    if q != usize::MAX {
                        neighbors[k][n_neighbors[k] as usize] = q;
                        n_neighbors[k] += 1;
                        bandwidth = bandwidth.max(k.abs_diff(q));
                    }
                }
            }
        }
        GridLaplacian { h, points, neighbors, n_neighbors, bandwidth }
    }

    pub fn dim(&self) -> usize {
        self.points.len()
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// Gershgorin bound on ‖A‖.
    pub fn norm_bound(&self) -> f64 {
        8.0 / (self.h * self.h)
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let inv = 1.0 / (self.h * self.h);
        for k in 0..x.len() {
            let mut s = 4.0 * x[k];
            for &q in &self.neighbors[k][..self.n_neighbors[k] as usize] {
                s -= x[q];
            }
            y[k] = s * inv;
        }
    }

    fn entry(&self, r: usize, c: usize) -> f64 {
        let inv = 1.0 / (self.h * self.h);
        if r == c {
            4.0 * inv
        } else if self.neighbors[r][..self.n_neighbors[r] as usize].contains(&c) {
            -inv
        } else {
            0.0
        }
    }
}

/// Cholesky factor L (A = L Lᵀ) stored by rows within the band.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    /// l[j * (bw + 1) + (j − i)] = L(j, i) for j − bw <= i <= j.
    l: Vec<f64>,
}

impl BandedCholesky {
    pub fn factor(a: &GridLaplacian) -> Result<Self, SpectraError> {
        let n = a.dim();
        let bw = a.bandwidth();
        let w = bw + 1;
        let mut l = vec![0.0; n * w];
        for j in 0..n {
            let j0 = j.saturating_sub(bw);
            for i in j0..=j {
                let mut s = a.entry(j, i);
                let p0 = j0.max(i.saturating_sub(bw));
                for p in p0..i {
                    s -= l[j * w + (j - p)] * l[i * w + (i - p)];
                }
                if i == j {
                    if s <= 0.0 {
                        return Err(SpectraError::NotPositiveDefinite(j));
                    }
                    l[j * w] = s.sqrt();
                } else {
                    l[j * w + (j - i)] = s / l[i * w];
                }
            }
        }
        Ok(BandedCholesky { n, bw, l })
    }

    /// Solve A x = b in place.
    pub fn solve(&self, x: &mut [f64]) {
        let w = self.bw + 1;
        for j in 0..self.n {
            let mut s = x[j];
            for i in j.saturating_sub(self.bw)..j {
                s -= self.l[j * w + (j - i)] * x[i];
            }
            x[j] = s / self.l[j * w];
        }
        for j in (0..self.n).rev() {
            let mut s = x[j];
            for i in (j + 1)..(j + 1 + self.bw).min(self.n) {
                s -= self.l[i * w + (i - j)] * x[i];
            }
            x[j] = s / self.l[j * w];
        }
    }
}

fn dotp(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn orthogonalize(v: &mut [f64], against: &[Vec<f64>]) {
    // two passes of classical Gram–Schmidt
    for _ in 0..2 {
        let coeffs: Vec<f64> = against.par_iter().map(|u| dotp(u, v)).collect();
        for (u, c) in against.iter().zip(coeffs) {
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= c * ui;
            }
        }
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dotp(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Lowest `k` eigenpairs of the grid Laplacian (values ascending).
pub fn lowest_eigenpairs(a: &GridLaplacian, k: usize, opts: FdOptions) -> Result<Vec<(f64, Vec<f64>)>, SpectraError> {
    let n = a.dim();
    if n < k || k == 0 {
        return Err(SpectraError::InsufficientResolution { interior: n, requested: k });
    }
    let chol = BandedCholesky::factor(a)?;
    let tol = opts.rel_tol * a.norm_bound();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut locked: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut m = (2 * k + 20).max(40);
    let mut ax = vec![0.0; n];
    for _ in 0..200 {
        let free = n - locked.len();
        if free == 0 {
            break;
        }
        let steps = m.min(free);
        let locked_vecs: Vec<Vec<f64>> = locked.iter().map(|p| p.1.clone()).collect();
        let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        orthogonalize(&mut v, &locked_vecs);
        normalize(&mut v);
        let mut basis: Vec<Vec<f64>> = vec![v];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        for j in 0..steps {
            let mut w = basis[j].clone();
            chol.solve(&mut w);
            let aj = dotp(&w, &basis[j]);
            alpha.push(aj);
            orthogonalize(&mut w, &locked_vecs);
            orthogonalize(&mut w, &basis);
            let bj = normalize(&mut w);
            if j + 1 == steps || bj <= 1e-13 * aj.abs() {
                break;
            }
            beta.push(bj);
            basis.push(w);
        }
        let dim = alpha.len();
        let mut t = DMatrix::<f64>::zeros(dim, dim);
        for i in 0..dim {
            t[(i, i)] = alpha[i];
            if i + 1 < dim {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
        let kth_locked = {
            let mut vals: Vec<f64> = locked.iter().map(|p| p.0).collect();
            vals.sort_by(f64::total_cmp);
            vals.get(k - 1).copied()
        };
        let mut newly = Vec::new();
        let mut top: Option<(f64, bool)> = None;
        for &idx in &order {
            if eig.eigenvalues[idx] <= 0.0 {
                continue;
            }
            let y = eig.eigenvectors.column(idx);
            let mut x = vec![0.0; n];
            for (c, b) in y.iter().zip(&basis) {
                for (xi, bi) in x.iter_mut().zip(b) {
                    *xi += c * bi;
                }
            }
            normalize(&mut x);
            a.apply(&x, &mut ax);
            let lam = dotp(&x, &ax);
            let res = ax.iter().zip(&x).map(|(p, q)| (p - lam * q).powi(2)).sum::<f64>().sqrt();
            let ok = res <= tol;
            if top.is_none() {
                top = Some((lam, ok));
            }
            if ok {
                newly.push((lam, x));
            }
        }
        // the best Ritz value of the complement lies above the k-th locked value: done
        if let (Some(kth), Some((lam_top, true))) = (kth_locked, top) {
            if lam_top >= kth - tol {
                break;
            }
        }
        if newly.is_empty() {
            if m >= free {
                return Err(SpectraError::NoConvergence(format!(
                    "no Ritz pair reached residual {tol:e} with a full Krylov space"
                )));
            }
            m = (2 * m).min(free);
            continue;
        }
        locked.extend(newly);
    }
    locked.sort_by(|x, y| x.0.total_cmp(&y.0));
    if locked.len() < k {
        return Err(SpectraError::NoConvergence(format!("only {} of {k} eigenpairs converged", locked.len())));
    }
    locked.truncate(k);
    Ok(locked)
}

/// Lowest `num_eigs` Dirichlet eigenvalues of the 5-point Laplacian with spacing h.
pub fn polygon_dirichlet_spectrum_fd(
    poly: &ConvexPolygon,
    h: f64,
    num_eigs: usize,
    opts: FdOptions,
) -> Result<Spectrum, SpectraError> {
    let r_in = poly.inradius();
    if !(h > 0.0 && h < 0.5 * r_in) {
        return Err(SpectraError::GridTooCoarse { h, r_in });
    }
    if num_eigs == 0 {
        return Err(SpectraError::InvalidArgument("num_eigs must be at least 1".into()));
    }
    let grid = GridLaplacian::new(poly, h);
    let pairs = lowest_eigenpairs(&grid, num_eigs, opts)?;
    let ev: Vec<f64> = pairs.into_iter().map(|p| p.0).collect();
    let top = *ev.last().unwrap();
    Spectrum::new(ev, BoundaryCondition::Dirichlet, top, Domain::ConvexPolygon(poly.clone()), false)
}

/// Richardson extrapolation of O(h²) eigenvalues from spacings h and h/2:
/// returns (extrapolated values, error bars |extrapolated − fine|).
pub fn richardson(coarse: &Spectrum, fine: &Spectrum) -> (Vec<f64>, Vec<f64>) {
    coarse
        .eigenvalues()
        .iter()
        .zip(fine.eigenvalues())
        .map(|(c, f)| {
            let e = (4.0 * f - c) / 3.0;
            (e, (e - f).abs())
        })
        .unzip()
}
