pub mod convex_geometry;
pub mod quad;
pub mod riesz_calculus;
pub mod shape_opt;
pub mod special;
pub mod spectra;
pub mod tauberian;
pub mod weyl_constants;

/// Library version embedded in emitted reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
