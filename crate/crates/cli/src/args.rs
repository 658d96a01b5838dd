use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use weylab::convex_geometry::{ConvexPolygon, PolygonFile};
use weylab::spectra::Domain;
use weylab::weyl_constants::BoundaryCondition;

/// Input that failed validation (reported with exit code 2).
#[derive(Debug)]
pub struct ValidationError(pub String);

impl std::fmt::Display for ValidationError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ValidationError {}

pub fn invalid(msg: impl Into<String>) -> anyhow::Error {
    ValidationError(msg.into()).into()
}

/// A strictly increasing grid: `start:stop:count` (log-spaced), a comma list, or one value.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Grid(pub Vec<f64>);

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("bad number {t:?}: {e}"));
        let values = if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            if parts.len() != 3 {
                return Err(format!("expected start:stop:count, got {s:?}"));
            }
            let (a, b) = (num(parts[0])?, num(parts[1])?);
            let n: usize = parts[2].trim().parse().map_err(|e| format!("bad count {:?}: {e}", parts[2]))?;
            if !(a > 0.0 && b > 0.0) {
                return Err("log-spaced grids need positive endpoints".into());
            }
            match n {
                0 => Vec::new(),
                1 => vec![a],
                _ => (0..n).map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64)).collect(),
            }
        } else if s.trim().is_empty() {
            Vec::new()
        } else {
            s.split(',').map(num).collect::<Result<_, _>>()?
        };
        if values.is_empty() {
            return Err("grid is empty".into());
        }
        if values.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err("grid values must be positive and finite".into());
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err("grid must be strictly increasing".into());
        }
        Ok(Grid(values))
    }
}

/// `unit-square`, `square:s`, `rectangle:a:b`, `disk:r`, `regular:n:side` or `polygon:<file.json>`.
pub fn parse_domain(s: &str) -> anyhow::Result<Domain> {
    // every failure here is an input problem
    parse_domain_inner(s).map_err(|e| if e.is::<ValidationError>() { e } else { invalid(e.to_string()) })
}

fn parse_domain_inner(s: &str) -> anyhow::Result<Domain> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |i: usize| -> anyhow::Result<f64> {
        let t = parts.get(i).ok_or_else(|| invalid(format!("domain {s:?} is missing a parameter")))?;
        t.parse::<f64>().map_err(|e| invalid(format!("bad domain parameter {t:?}: {e}")))
    };
    let d = match parts[0] {
        "unit-square" => Domain::unit_square(),
        "square" => Domain::rectangle(num(1)?, num(1)?)?,
        "rectangle" => Domain::rectangle(num(1)?, num(2)?)?,
        "disk" => Domain::disk(num(1)?)?,
        "regular" => {
            let n = num(1)?;
            if n.fract() != 0.0 || n < 3.0 {
                return Err(invalid(format!("regular polygons need an integer n >= 3, got {n}")));
            }
            Domain::ConvexPolygon(ConvexPolygon::regular(n as usize, num(2)?)?)
        }
        "polygon" => {
            let path = s.split_once(':').map(|p| p.1).unwrap_or_default();
            let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {path:?}: {e}")))?;
            let file: PolygonFile = serde_json::from_str(&text).map_err(|e| invalid(format!("bad polygon file: {e}")))?;
            Domain::ConvexPolygon(ConvexPolygon::try_from(file)?)
        }
        other => return Err(invalid(format!("unknown domain kind {other:?}"))),
    };
    Ok(d)
}

#[derive(Debug, Parser, Serialize)]
#[command(name = "weylab", version, about = "Spectral asymptotics verification campaigns")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Write the JSON report here instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for randomized suites
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Semiclassical constants table
    Constants(ConstantsArgs),
    /// Generate and serialize a spectrum
    Spectrum(SpectrumArgs),
    /// Two-term Riesz-mean remainder sweep with envelope verdicts
    WeylCheck(WeylArgs),
    /// Third-term (corner) extraction for polygons
    PolygonCheck(WeylArgs),
    /// Heat-trace residuals against the two-term and polygon formulas
    HeatCheck(HeatArgs),
    /// Pointwise remainder slopes on rectangles
    PointwiseCheck(PointwiseArgs),
    /// Mollifier hierarchy, b_m tables and identity residuals
    TauberianDemo(TauberianArgs),
    /// Convex-geometry invariant suite
    Geometry(GeometryArgs),
    /// Unit-area shape optimization runs
    ShapeOpt(ShapeOptArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Constants(_) => "constants",
            Command::Spectrum(_) => "spectrum",
            Command::WeylCheck(_) => "weyl-check",
            Command::PolygonCheck(_) => "polygon-check",
            Command::HeatCheck(_) => "heat-check",
            Command::PointwiseCheck(_) => "pointwise-check",
            Command::TauberianDemo(_) => "tauberian-demo",
            Command::Geometry(_) => "geometry",
            Command::ShapeOpt(_) => "shape-opt",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct ConstantsArgs {
    #[arg(long, value_delimiter = ',', default_value = "0,0.5,1,1.5,2")]
    pub gamma: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub dim: Vec<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct SpectrumArgs {
    #[arg(long, default_value = "unit-square")]
    pub domain: String,
    #[arg(long, default_value = "dirichlet")]
    pub bc: BoundaryCondition,
    /// Spectrum is complete below this value
    #[arg(long)]
    pub lambda_max: f64,
    /// FD spacing (polygons)
    #[arg(long)]
    pub grid_h: Option<f64>,
    /// Eigenvalue file (JSON header line + CSV records)
    #[arg(long)]
    pub spectrum_out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct WeylArgs {
    #[arg(long, default_value = "unit-square")]
    pub domain: String,
    #[arg(long, default_value = "dirichlet")]
    pub bc: BoundaryCondition,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// λ grid, e.g. 1e4:1e5:20
    #[arg(long)]
    pub lambda: Grid,
    #[arg(long)]
    pub grid_h: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct HeatArgs {
    #[arg(long, default_value = "unit-square")]
    pub domain: String,
    #[arg(long, default_value = "dirichlet")]
    pub bc: BoundaryCondition,
    /// t grid, e.g. 0.005,0.01,0.02
    #[arg(long)]
    pub t: Grid,
    /// Bound on the omitted spectral tail of each heat trace
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct PointwiseArgs {
    #[arg(long, default_value = "unit-square")]
    pub domain: String,
    #[arg(long, default_value = "dirichlet")]
    pub bc: BoundaryCondition,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value = "1e3:1e5:20")]
    pub lambda: Grid,
    /// Interior point `x,y` (defaults to the center)
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub point: Option<Vec<f64>>,
}

#[derive(Debug, Args, Serialize)]
pub struct TauberianArgs {
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.05")]
    pub eps: Vec<f64>,
    /// Identity orders 1..=m-max
    #[arg(long, default_value_t = 2)]
    pub m_max: usize,
    /// Hierarchy depth K
    #[arg(long, default_value_t = 6)]
    pub depth: usize,
    #[arg(long, value_delimiter = ',', default_value = "2,5")]
    pub tau: Vec<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct GeometryArgs {
    /// A polygonal domain; without it, a seeded random suite is run
    #[arg(long)]
    pub domain: Option<String>,
    #[arg(long, default_value_t = 20)]
    pub count: usize,
    /// Points sampled per random polygon (hull taken)
    #[arg(long, default_value_t = 8)]
    pub vertices: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct ShapeOptArgs {
    #[arg(long, default_value = "dirichlet")]
    pub bc: BoundaryCondition,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long)]
    pub lambda: Grid,
    /// Search stops when the bracket is narrower than this
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Optimize over the corner-cut polygon family with FD spectra instead
    #[arg(long)]
    pub experimental: bool,
    /// Coarse FD spacing for --experimental
    #[arg(long, default_value_t = 0.05)]
    pub grid_h: f64,
    /// CSV of every evaluation: lambda,param,objective,error_bar
    #[arg(long)]
    pub trace_csv: Option<PathBuf>,
}
