//! Python bindings: spectra, convex polygons, semiclassical predictions, Riesz
//! lifts, the mollifier hierarchy and rectangle shape optimization.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use weylab::convex_geometry as geo;
use weylab::riesz_calculus as rc;
use weylab::shape_opt;
use weylab::spectra as sp;
use weylab::tauberian as tb;
use weylab::weyl_constants as wc;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn parse_bc(bc: &str) -> PyResult<wc::BoundaryCondition> {
    bc.parse().map_err(value_err)
}

fn params(gamma: f64, dim: usize) -> PyResult<wc::SemiclassicalParams> {
    wc::SemiclassicalParams::new(gamma, dim).map_err(value_err)
}

#[pyfunction]
fn lt_constant(gamma: f64, dim: usize) -> PyResult<f64> {
    Ok(wc::lt_constant(params(gamma, dim)?))
}

#[pyfunction]
#[pyo3(signature = (lam, gamma, volume, perimeter, bc = "dirichlet", dim = 2))]
fn two_term_prediction(lam: f64, gamma: f64, volume: f64, perimeter: f64, bc: &str, dim: usize) -> PyResult<f64> {
    Ok(wc::two_term_prediction(lam, params(gamma, dim)?, volume, perimeter, parse_bc(bc)?))
}

#[pyfunction]
#[pyo3(signature = (lam, gamma, area, perimeter, angles, bc = "dirichlet"))]
fn three_term_polygon_prediction(lam: f64, gamma: f64, area: f64, perimeter: f64, angles: Vec<f64>, bc: &str) -> PyResult<f64> {
    wc::three_term_polygon_prediction(lam, gamma, area, perimeter, &angles, parse_bc(bc)?).map_err(value_err)
}

#[pyfunction]
fn heat_polygon_prediction(t: f64, area: f64, perimeter: f64, angles: Vec<f64>) -> PyResult<f64> {
    wc::heat_polygon_prediction(t, area, perimeter, &angles).map_err(value_err)
}

/// Sorted eigenvalues complete below `complete_below`.
#[pyclass(name = "Spectrum", module = "pyweylab")]
struct PySpectrum {
    inner: sp::Spectrum,
}

#[pymethods]
impl PySpectrum {
    #[staticmethod]
    #[pyo3(signature = (a, b, lambda_max, bc = "dirichlet"))]
    fn rectangle(a: f64, b: f64, lambda_max: f64, bc: &str) -> PyResult<Self> {
        Ok(PySpectrum { inner: sp::rectangle_spectrum(a, b, parse_bc(bc)?, lambda_max).map_err(value_err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (radius, lambda_max, bc = "dirichlet"))]
    fn disk(radius: f64, lambda_max: f64, bc: &str) -> PyResult<Self> {
        Ok(PySpectrum { inner: sp::disk_spectrum(radius, parse_bc(bc)?, lambda_max).map_err(value_err)? })
    }

    /// Lowest `num_eigs` Dirichlet eigenvalues of the 5-point Laplacian.
    #[staticmethod]
    fn polygon_fd(polygon: &PyPolygon, h: f64, num_eigs: usize) -> PyResult<Self> {
        let inner = sp::polygon_dirichlet_spectrum_fd(&polygon.inner, h, num_eigs, sp::FdOptions::default())
            .map_err(runtime_err)?;
        Ok(PySpectrum { inner })
    }

    fn eigenvalues(&self) -> Vec<f64> {
        self.inner.eigenvalues().to_vec()
    }

    #[getter]
    fn complete_below(&self) -> f64 {
        self.inner.complete_below()
    }

    #[getter]
    fn exact(&self) -> bool {
        self.inner.exact()
    }

    fn counting(&self, lam: f64) -> PyResult<usize> {
        sp::counting_function(&self.inner, lam).map_err(value_err)
    }

    fn riesz_mean(&self, lam: f64, gamma: f64) -> PyResult<f64> {
        sp::riesz_mean(&self.inner, lam, gamma).map_err(value_err)
    }

    /// (value, tail_bound) of Σ e^{−tλ_n}.
    fn heat_trace(&self, t: f64) -> PyResult<(f64, f64)> {
        let h = sp::heat_trace(&self.inner, t, self.inner.domain().area(), None).map_err(value_err)?;
        Ok((h.value, h.tail_bound))
    }

    fn __len__(&self) -> usize {
        self.inner.eigenvalues().len()
    }

    fn __repr__(&self) -> String {
        format!("Spectrum(n={}, complete_below={}, exact={})", self.inner.eigenvalues().len(), self.inner.complete_below(), self.inner.exact())
    }
}

#[pyclass(name = "ConvexPolygon", module = "pyweylab")]
struct PyPolygon {
    inner: geo::ConvexPolygon,
}

#[pymethods]
impl PyPolygon {
    #[new]
    fn new(vertices: Vec<[f64; 2]>) -> PyResult<Self> {
        Ok(PyPolygon { inner: geo::ConvexPolygon::new(vertices).map_err(value_err)? })
    }

    #[staticmethod]
    fn regular(n: usize, side: f64) -> PyResult<Self> {
        Ok(PyPolygon { inner: geo::ConvexPolygon::regular(n, side).map_err(value_err)? })
    }

    #[staticmethod]
    fn corner_cut_square(c: f64) -> PyResult<Self> {
        Ok(PyPolygon { inner: shape_opt::corner_cut_square(c).map_err(value_err)? })
    }

    fn vertices(&self) -> Vec<[f64; 2]> {
        self.inner.vertices().to_vec()
    }
    #[getter]
    fn area(&self) -> f64 {
        self.inner.area()
    }
    #[getter]
    fn perimeter(&self) -> f64 {
        self.inner.perimeter()
    }
    #[getter]
    fn inradius(&self) -> f64 {
        self.inner.inradius()
    }
    fn angles(&self) -> Vec<f64> {
        self.inner.angles().to_vec()
    }
    fn theta_omega(&self) -> f64 {
        self.inner.theta_omega()
    }
    fn distance_level_volume(&self, s: f64) -> PyResult<f64> {
        self.inner.distance_level_volume(s).map_err(value_err)
    }
    fn minkowski_ball_area(&self, r: f64) -> PyResult<f64> {
        self.inner.minkowski_ball_area(r).map_err(value_err)
    }
    fn bishop_gromov_profile(&self, a: [f64; 2], radii: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.bishop_gromov_profile(a, &radii).map_err(value_err)
    }
    /// (smallest angle, corner radius R).
    fn corner_params(&self) -> (f64, f64) {
        let c = self.inner.corner_params();
        (c.alpha_min, c.r)
    }

    fn __repr__(&self) -> String {
        format!("ConvexPolygon(n={}, area={})", self.inner.len(), self.inner.area())
    }
}

fn sampled(grid: Vec<f64>, values: Vec<f64>, linear: bool) -> PyResult<rc::SampledFunction> {
    let interp = if linear { rc::Interpolation::PiecewiseLinear } else { rc::Interpolation::PiecewiseConstantLeft };
    rc::SampledFunction::new(grid, values, interp).map_err(value_err)
}

/// Riesz lift of order κ of a sampled function, evaluated on the same grid.
#[pyfunction]
#[pyo3(signature = (grid, values, kappa, linear = false))]
fn riesz_lift(grid: Vec<f64>, values: Vec<f64>, kappa: f64, linear: bool) -> PyResult<Vec<f64>> {
    let f = sampled(grid, values, linear)?;
    Ok(rc::riesz_lift(&f, kappa).map_err(value_err)?.values().to_vec())
}

#[pyfunction]
#[pyo3(signature = (grid, values, kappa1, kappa2, linear = false))]
fn semigroup_check(grid: Vec<f64>, values: Vec<f64>, kappa1: f64, kappa2: f64, linear: bool) -> PyResult<f64> {
    rc::semigroup_check(&sampled(grid, values, linear)?, kappa1, kappa2).map_err(value_err)
}

/// (lhs, rhs, ratio) of the interpolation inequality.
#[pyfunction]
fn riesz_interpolation_certificate(grid: Vec<f64>, values: Vec<f64>, sigma: f64, gamma: f64) -> PyResult<(f64, f64, f64)> {
    let c = rc::riesz_interpolation_certificate(&sampled(grid, values, false)?, sigma, gamma).map_err(value_err)?;
    Ok((c.lhs, c.rhs, c.ratio))
}

/// The φ_{k,ε} hierarchy for the bump-squared mollifier.
#[pyclass(name = "PhiHierarchy", module = "pyweylab")]
struct PyHierarchy {
    inner: tb::PhiHierarchy,
}

#[pymethods]
impl PyHierarchy {
    #[new]
    fn new(eps: f64, depth: usize) -> PyResult<Self> {
        let fam = tb::build_mollifier(tb::MollifierKind::BumpSquared);
        Ok(PyHierarchy { inner: tb::build_phi_hierarchy(&fam, eps, depth).map_err(value_err)? })
    }

    #[getter]
    fn eps(&self) -> f64 {
        self.inner.eps()
    }
    fn b(&self, m: usize) -> f64 {
        self.inner.b(m)
    }
    fn b_closed_form(&self, m: usize) -> f64 {
        self.inner.b_closed_form(m)
    }
    fn phi(&self, k: usize, tau: f64) -> PyResult<f64> {
        if k > self.inner.depth() {
            return Err(PyValueError::new_err(format!("k = {k} exceeds depth {}", self.inner.depth())));
        }
        Ok(self.inner.phi(k).eval(tau))
    }
    fn integral(&self, k: usize) -> f64 {
        self.inner.integral(k)
    }
    fn parity_defect(&self, k: usize) -> f64 {
        self.inner.parity_defect(k)
    }
    /// [(k, sup_ratio)] of |φ_k|/ψ_k.
    fn majorants(&self) -> Vec<(usize, f64)> {
        tb::majorant_check(&self.inner).into_iter().map(|r| (r.k, r.sup_ratio)).collect()
    }
    /// (lhs, rhs, residual) of the iterated identity for an atomic measure.
    fn verify_identity(&self, atoms: Vec<(f64, f64)>, m: usize, tau: f64) -> PyResult<(f64, f64, f64)> {
        let mu = tb::AtomicMeasure::atoms_only(atoms).map_err(value_err)?;
        let r = tb::verify_iterated_identity_with(&mu, m, tau, &self.inner).map_err(value_err)?;
        Ok((r.lhs, r.rhs, r.residual))
    }
}

/// Smoothed Riesz mean R_{μ,ε}^γ(τ) of an atomic measure (ε = 0: unsmoothed).
#[pyfunction]
fn smoothed_riesz(atoms: Vec<(f64, f64)>, gamma: f64, tau: f64, eps: f64) -> PyResult<f64> {
    let mu = tb::AtomicMeasure::atoms_only(atoms).map_err(value_err)?;
    let fam = tb::build_mollifier(tb::MollifierKind::BumpSquared);
    tb::smoothed_riesz(&mu, gamma, tau, eps, &fam).map_err(value_err)
}

/// (best aspect, best objective, degenerate, [(aspect, objective)]).
#[pyfunction]
#[pyo3(signature = (lam, gamma = 1.0, bc = "dirichlet", tol = 1e-6))]
fn optimize_rectangle(lam: f64, gamma: f64, bc: &str, tol: f64) -> PyResult<(f64, f64, bool, Vec<(f64, f64)>)> {
    let run = shape_opt::optimize_rectangle(lam, gamma, parse_bc(bc)?, tol).map_err(value_err)?;
    let trace = run.optimizer_trace.iter().map(|e| (e.params[0], e.objective)).collect();
    Ok((run.best.params[0], run.best.objective, run.degenerate, trace))
}

#[pymodule]
fn pyweylab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", weylab::VERSION)?;
    m.add_class::<PySpectrum>()?;
    m.add_class::<PyPolygon>()?;
    m.add_class::<PyHierarchy>()?;
    m.add_function(wrap_pyfunction!(lt_constant, m)?)?;
    m.add_function(wrap_pyfunction!(two_term_prediction, m)?)?;
    m.add_function(wrap_pyfunction!(three_term_polygon_prediction, m)?)?;
    m.add_function(wrap_pyfunction!(heat_polygon_prediction, m)?)?;
    m.add_function(wrap_pyfunction!(riesz_lift, m)?)?;
    m.add_function(wrap_pyfunction!(semigroup_check, m)?)?;
    m.add_function(wrap_pyfunction!(riesz_interpolation_certificate, m)?)?;
    m.add_function(wrap_pyfunction!(smoothed_riesz, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_rectangle, m)?)?;
    Ok(())
}
