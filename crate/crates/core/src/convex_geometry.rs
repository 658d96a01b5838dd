//! Exact planar convex-polygon geometry: area, perimeter, inradius (Chebyshev
//! center), erosions (inner parallel bodies), the boundary-layer functional Θ,
//! Steiner areas, disk–polygon intersection areas and corner wedge parameters.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Point = [f64; 2];

/// Relative tolerance on cross products when validating convexity.
pub const DEGENERACY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("non-finite vertex coordinate")]
    NonFinite,
    #[error("polygon is not strictly convex and counter-clockwise at vertex {0}")]
    NotStrictlyConvex(usize),
    #[error("polygon winds more than once")]
    SelfIntersecting,
    #[error("parameter {name} = {value} outside [{lo}, {hi}]")]
    OutOfRange { name: &'static str, value: f64, lo: f64, hi: f64 },
    #[error("point ({0}, {1}) is not in the closed polygon")]
    PointOutside(f64, f64),
    #[error("radii must be positive and strictly increasing")]
    BadRadii,
    #[error("Bishop–Gromov profile increased by {0:e} between consecutive radii")]
    NonMonotoneProfile(f64),
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn cross2(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

fn shoelace(v: &[Point]) -> f64 {
    let n = v.len();
    if n < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..n {
        s += cross2(v[i], v[(i + 1) % n]);
    }
    0.5 * s
}

fn ring_perimeter(v: &[Point]) -> f64 {
    let n = v.len();
    match n {
        0 | 1 => 0.0,
        // a degenerate two-point ring is a segment traversed twice
        _ => (0..n).map(|i| norm(sub(v[(i + 1) % n], v[i]))).sum(),
    }
}

/// A strictly convex polygon with counter-clockwise vertices and cached functionals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolygonFile", into = "PolygonFile")]
pub struct ConvexPolygon {
    vertices: Vec<Point>,
    area: f64,
    perimeter: f64,
    angles: Vec<f64>,
}

/// On-disk form: `{"vertices": [[x, y], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolygonFile {
    pub vertices: Vec<Point>,
}

impl TryFrom<PolygonFile> for ConvexPolygon {
    type Error = GeometryError;
    fn try_from(f: PolygonFile) -> Result<Self, Self::Error> {
        ConvexPolygon::new(f.vertices)
    }
}

impl From<ConvexPolygon> for PolygonFile {
    fn from(p: ConvexPolygon) -> Self {
        PolygonFile { vertices: p.vertices }
    }
}

/// A half-plane `n·x <= c` with unit outward normal `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlane {
    pub normal: Point,
    pub offset: f64,
}

impl HalfPlane {
    pub fn eval(&self, p: Point) -> f64 {
        dot(self.normal, p) - self.offset
    }
}

impl ConvexPolygon {
    pub fn new(vertices: Vec<Point>) -> Result<Self, GeometryError> {
        let n = vertices.len();
        if n < 3 {
            return Err(GeometryError::TooFewVertices(n));
        }
        if vertices.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let scale = vertices
            .iter()
            .flat_map(|p| p.iter())
            .fold(0.0f64, |m, x| m.max(x.abs()))
            .max(f64::MIN_POSITIVE);
        let mut turning = 0.0;
        let mut angles = Vec::with_capacity(n);
        for i in 0..n {
            let prev = vertices[(i + n - 1) % n];
            let cur = vertices[i];
            let next = vertices[(i + 1) % n];
            let e1 = sub(cur, prev);
            let e2 = sub(next, cur);
            let c = cross2(e1, e2);
            if c <= DEGENERACY_TOL * norm(e1).max(scale) * norm(e2).max(scale) || norm(e1) == 0.0 {
                return Err(GeometryError::NotStrictlyConvex(i));
            }
            let turn = c.atan2(dot(e1, e2));
            turning += turn;
            angles.push(PI - turn);
        }
        if (turning - 2.0 * PI).abs() > 1e-9 {
            return Err(GeometryError::SelfIntersecting);
        }
        let area = shoelace(&vertices);
        let perimeter = ring_perimeter(&vertices);
        Ok(ConvexPolygon { vertices, area, perimeter, angles })
    }

    /// Axis-aligned rectangle [0, a] × [0, b].
    pub fn rectangle(a: f64, b: f64) -> Result<Self, GeometryError> {
        Self::new(vec![[0.0, 0.0], [a, 0.0], [a, b], [0.0, b]])
    }

    pub fn unit_square() -> Self {
        Self::rectangle(1.0, 1.0).expect("unit square is valid")
    }

    /// Regular n-gon with given side length, centered at the origin.
    pub fn regular(n: usize, side: f64) -> Result<Self, GeometryError> {
        let circ = side / (2.0 * (PI / n as f64).sin());
        let v = (0..n)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n as f64;
                [circ * t.cos(), circ * t.sin()]
            })
            .collect();
        Self::new(v)
    }

    /// Convex hull (monotone chain), collinear points dropped.
    pub fn hull(points: &[Point]) -> Result<Self, GeometryError> {
        let mut pts: Vec<Point> = points.to_vec();
        pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        pts.dedup();
        if pts.len() < 3 {
            return Err(GeometryError::TooFewVertices(pts.len()));
        }
        let mut lower: Vec<Point> = Vec::new();
        for &p in &pts {
            while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
                lower.pop();
            }
            lower.push(p);
        }
        let mut upper: Vec<Point> = Vec::new();
        for &p in pts.iter().rev() {
            while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
                upper.pop();
            }
            upper.push(p);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        Self::new(lower)
    }

    /// Random convex polygon: hull of `n` points drawn near a random ellipse.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Self {
        loop {
            let a = rng.random_range(0.3..2.0);
            let b = rng.random_range(0.3..2.0);
            let rot: f64 = rng.random_range(0.0..PI);
            let cx = rng.random_range(-1.0..1.0);
            let cy = rng.random_range(-1.0..1.0);
            let pts: Vec<Point> = (0..n.max(3))
                .map(|_| {
                    let t: f64 = rng.random_range(0.0..2.0 * PI);
                    let rad: f64 = rng.random_range(0.7..1.0);
                    let (x, y) = (a * rad * t.cos(), b * rad * t.sin());
                    [cx + x * rot.cos() - y * rot.sin(), cy + x * rot.sin() + y * rot.cos()]
                })
                .collect();
            if let Ok(p) = Self::hull(&pts) {
                // keep the sample away from near-degenerate slivers
                if p.angles.iter().all(|&a| a < PI - 1e-6) && p.area > 1e-3 {
                    return p;
                }
            }
        }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }
    pub fn area(&self) -> f64 {
        self.area
    }
    pub fn perimeter(&self) -> f64 {
        self.perimeter
    }
    /// Interior angles in (0, π); they sum to (n − 2)π.
    pub fn angles(&self) -> &[f64] {
        &self.angles
    }
    pub fn len(&self) -> usize {
        self.vertices.len()
    }
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn half_planes(&self) -> Vec<HalfPlane> {
        self.edges()
            .map(|(p, q)| {
                let e = sub(q, p);
                let l = norm(e);
                let normal = [e[1] / l, -e[0] / l];
                HalfPlane { normal, offset: dot(normal, p) }
            })
            .collect()
    }

    pub fn centroid(&self) -> Point {
        let n = self.vertices.len();
        let (mut cx, mut cy) = (0.0, 0.0);
        for i in 0..n {
            let p = self.vertices[i];
            let q = self.vertices[(i + 1) % n];
            let c = cross2(p, q);
            cx += (p[0] + q[0]) * c;
            cy += (p[1] + q[1]) * c;
        }
        [cx / (6.0 * self.area), cy / (6.0 * self.area)]
    }

    /// Closed containment with an absolute tolerance.
    pub fn contains(&self, p: Point, tol: f64) -> bool {
        self.half_planes().iter().all(|h| h.eval(p) <= tol)
    }

    /// d_Ω(x) for x in the closed polygon (negative outside).
    pub fn dist_to_boundary(&self, p: Point) -> f64 {
        self.half_planes().iter().map(|h| -h.eval(p)).fold(f64::INFINITY, f64::min)
    }

    pub fn scaled(&self, s: f64) -> Result<Self, GeometryError> {
        Self::new(self.vertices.iter().map(|p| [s * p[0], s * p[1]]).collect())
    }

    pub fn translated(&self, d: Point) -> Result<Self, GeometryError> {
        Self::new(self.vertices.iter().map(|p| [p[0] + d[0], p[1] + d[1]]).collect())
    }

    /// Chebyshev center and inradius: max r s.t. n_i·x + r <= c_i for all edges.
    /// Solved exactly by enumerating the vertices of the 3-variable LP.
    pub fn chebyshev_center(&self) -> (Point, f64) {
        let hs = self.half_planes();
        let m = hs.len();
        let scale = self.perimeter;
        let mut best = (self.centroid(), self.dist_to_boundary(self.centroid()));
        for i in 0..m {
            for j in (i + 1)..m {
                for k in (j + 1)..m {
                    let rows = [hs[i], hs[j], hs[k]];
                    if let Some((x, r)) = solve_tangent(&rows) {
                        if r > best.1 && hs.iter().all(|h| h.eval(x) + r <= 1e-12 * scale) {
                            best = (x, r);
                        }
                    }
                }
            }
        }
        best
    }

    pub fn inradius(&self) -> f64 {
        self.chebyshev_center().1
    }

    /// Intersection with a half-plane (Sutherland–Hodgman); may be empty or degenerate.
    pub fn clip_ring(ring: &[Point], h: &HalfPlane) -> Vec<Point> {
        let n = ring.len();
        let mut out = Vec::with_capacity(n + 1);
        for i in 0..n {
            let p = ring[i];
            let q = ring[(i + 1) % n];
            let fp = h.eval(p);
            let fq = h.eval(q);
            if fp <= 0.0 {
                out.push(p);
            }
            if (fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0) {
                let t = fp / (fp - fq);
                out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
            }
        }
        dedup_ring(out, 1e-14 * (1.0 + ring_perimeter(ring)))
    }

    /// Vertices of the inner parallel body {x : d_Ω(x) > s} (its closure).
    pub fn erosion_ring(&self, s: f64) -> Vec<Point> {
        let mut ring = self.vertices.clone();
        for h in self.half_planes() {
            let hs = HalfPlane { normal: h.normal, offset: h.offset - s };
            ring = Self::clip_ring(&ring, &hs);
            if ring.is_empty() {
                break;
            }
        }
        ring
    }

    fn check_s(&self, s: f64, r_in: f64) -> Result<(), GeometryError> {
        if !(s >= 0.0 && s <= r_in * (1.0 + 1e-12)) {
            return Err(GeometryError::OutOfRange { name: "s", value: s, lo: 0.0, hi: r_in });
        }
        Ok(())
    }

    /// |{x ∈ Ω : d_Ω(x) < s}| for 0 <= s <= r_in.
    pub fn distance_level_volume(&self, s: f64) -> Result<f64, GeometryError> {
        let r_in = self.inradius();
        self.check_s(s, r_in)?;
        Ok(self.area - shoelace(&self.erosion_ring(s)).max(0.0))
    }

    /// Area of the inner parallel body at distance s.
    pub fn inner_parallel_area(&self, s: f64) -> Result<f64, GeometryError> {
        let r_in = self.inradius();
        self.check_s(s, r_in)?;
        Ok(shoelace(&self.erosion_ring(s)).max(0.0))
    }

    /// Perimeter of the inner parallel body at distance s, 0 <= s < r_in.
    pub fn inner_parallel_perimeter(&self, s: f64) -> Result<f64, GeometryError> {
        let r_in = self.inradius();
        if !(s >= 0.0 && s < r_in) {
            return Err(GeometryError::OutOfRange { name: "s", value: s, lo: 0.0, hi: r_in });
        }
        Ok(ring_perimeter(&self.erosion_ring(s)))
    }

    /// Θ_Ω = sup_{l>0} |{d_Ω <= l}|/l from the exact piecewise-quadratic erosion area.
    pub fn theta_omega(&self) -> f64 {
        let r_in = self.inradius();
        let total = self.area;
        let mut best = self.perimeter; // limit l → 0⁺
        let mut l0 = 0.0;
        let mut ring = self.vertices.clone();
        for _ in 0..(4 * self.vertices.len() + 4) {
            if l0 >= r_in || ring.len() < 3 {
                break;
            }
            let a0 = shoelace(&ring);
            let p0 = ring_perimeter(&ring);
            // A(l0 + δ) = a0 − p0 δ + k0 δ², k0 = Σ cot(θ_v/2)
            let n = ring.len();
            let mut k0 = 0.0;
            let mut speeds = vec![0.0; n];
            for i in 0..n {
                let prev = ring[(i + n - 1) % n];
                let next = ring[(i + 1) % n];
                let cur = ring[i];
                let e1 = sub(cur, prev);
                let e2 = sub(next, cur);
                let turn = cross2(e1, e2).atan2(dot(e1, e2));
                let theta = PI - turn;
                let c = 1.0 / (0.5 * theta).tan();
                k0 += c;
                speeds[i] += c; // edge i−1 → i loses c per unit δ at its end
                speeds[(i + n - 1) % n] += c;
            }
            let mut delta = f64::INFINITY;
            for i in 0..n {
                let len = norm(sub(ring[(i + 1) % n], ring[i]));
                if speeds[i] > 0.0 {
                    delta = delta.min(len / speeds[i]);
                }
            }
            let l1 = (l0 + delta).min(r_in);
            // V(l) = total − A(l) = α + β l − k0 l²
            let alpha = total - a0 - p0 * l0 - k0 * l0 * l0;
            let beta = p0 + 2.0 * k0 * l0;
            let ratio = |l: f64| (alpha + beta * l - k0 * l * l) / l;
            if l0 > 0.0 {
                best = best.max(ratio(l0));
            }
            best = best.max(ratio(l1));
            if alpha < 0.0 && k0 > 0.0 {
                let lc = (-alpha / k0).sqrt();
                if lc > l0 && lc < l1 {
                    best = best.max(ratio(lc));
                }
            }
            l0 = l1;
            ring = self.erosion_ring(l0);
        }
        // beyond r_in the ratio |Ω|/l only decreases
        best.max(total / r_in)
    }

    /// Planar Steiner formula |Ω + B_r| = |Ω| + r Per + π r².
    pub fn minkowski_ball_area(&self, r: f64) -> Result<f64, GeometryError> {
        if !(r >= 0.0) {
            return Err(GeometryError::OutOfRange { name: "r", value: r, lo: 0.0, hi: f64::INFINITY });
        }
        Ok(self.area + r * self.perimeter + PI * r * r)
    }

    /// Exact-distance membership test for Ω + B_r.
    pub fn in_minkowski_ball(&self, p: Point, r: f64) -> bool {
        if self.contains(p, 0.0) {
            return true;
        }
        self.edges().any(|(a, b)| point_segment_distance(p, a, b) <= r)
    }

    /// The explicit bounds on |Ω + B_r| used for comparison (d = 2).
    pub fn steiner_bounds(&self, r: f64, c1: f64) -> SteinerBounds {
        let r_in = self.inradius();
        let per = self.perimeter;
        let x = r / r_in;
        let third = if r <= c1 * r_in {
            let c2 = ((1.0 + c1).powi(2) - 1.0 - 2.0 * c1) / (2.0 * c1 * c1);
            Some(self.area + per * r * (1.0 + c2 * x))
        } else {
            None
        };
        let fourth = if r >= c1 * r_in {
            // s ↦ ((1+s)² + 1)/(2 s²) is decreasing, so the sup sits at s = c1
            let c2 = ((1.0 + c1).powi(2) + 1.0) / (2.0 * c1 * c1);
            Some(c2 * per * r * x)
        } else {
            None
        };
        SteinerBounds {
            lower: self.area + r * per,
            upper_mixed: self.area + r_in * per * ((1.0 + x).powi(2) - 1.0) / 2.0,
            upper_small_r: third,
            upper_large_r: fourth,
        }
    }

    /// |Ω ∩ B_r(a)| computed from signed triangle–disk areas (Green's theorem).
    pub fn disk_intersection_area(&self, a: Point, r: f64) -> f64 {
        self.edges().map(|(p, q)| triangle_disk_area(sub(p, a), sub(q, a), r)).sum::<f64>()
    }

    /// r ↦ |Ω ∩ B_r(a)|/r² for increasing radii; errors if it increases by more than 1e-10.
    pub fn bishop_gromov_profile(&self, a: Point, radii: &[f64]) -> Result<Vec<f64>, GeometryError> {
        if !self.contains(a, 1e-12 * self.perimeter) {
            return Err(GeometryError::PointOutside(a[0], a[1]));
        }
        if radii.is_empty() || radii[0] <= 0.0 || radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(GeometryError::BadRadii);
        }
        let out: Vec<f64> = radii.iter().map(|&r| self.disk_intersection_area(a, r) / (r * r)).collect();
        for w in out.windows(2) {
            if w[1] - w[0] > 1e-10 {
                return Err(GeometryError::NonMonotoneProfile(w[1] - w[0]));
            }
        }
        Ok(out)
    }

    fn wedge(&self, i: usize, r: f64) -> Sector {
        let n = self.vertices.len();
        let v = self.vertices[i];
        let next = self.vertices[(i + 1) % n];
        let prev = self.vertices[(i + n - 1) % n];
        let d1 = sub(next, v);
        let d2 = sub(prev, v);
        let (l1, l2) = (norm(d1), norm(d2));
        Sector { apex: v, u: [d1[0] / l1, d1[1] / l1], w: [d2[0] / l2, d2[1] / l2], r }
    }

    fn wedges_admissible(&self, r: f64) -> bool {
        let n = self.vertices.len();
        let hs = self.half_planes();
        let tol = 1e-13 * self.perimeter;
        let ws: Vec<Sector> = (0..n).map(|i| self.wedge(i, r)).collect();
        for s in &ws {
            if hs.iter().any(|h| s.support(h.normal) > h.offset + tol) {
                return false;
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if ws[i].intersects(&ws[j]) {
                    return false;
                }
            }
        }
        true
    }

    /// Corner wedge parameters: R is half the supremum radius at which the vertex
    /// sectors stay pairwise disjoint and inside the polygon.
    pub fn corner_params(&self) -> CornerParams {
        let diam = self
            .vertices
            .iter()
            .flat_map(|p| self.vertices.iter().map(move |q| norm(sub(*p, *q))))
            .fold(0.0, f64::max);
        let (mut lo, mut hi) = (0.0, diam);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if self.wedges_admissible(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * diam {
                break;
            }
        }
        let r_sup = 0.5 * (lo + hi);
        let wedges = (0..self.vertices.len())
            .map(|i| {
                let s = self.wedge(i, 0.5 * r_sup);
                WedgeDescriptor { apex: s.apex, dir_next: s.u, dir_prev: s.w, angle: self.angles[i] }
            })
            .collect();
        CornerParams {
            alpha_min: self.angles.iter().copied().fold(f64::INFINITY, f64::min),
            r: 0.5 * r_sup,
            wedges,
        }
    }
}

fn dedup_ring(v: Vec<Point>, tol: f64) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::with_capacity(v.len());
    for p in v {
        if out.last().is_none_or(|q| norm(sub(p, *q)) > tol) {
            out.push(p);
        }
    }
    while out.len() > 1 && norm(sub(out[0], *out.last().unwrap())) <= tol {
        out.pop();
    }
    out
}

fn solve_tangent(rows: &[HalfPlane; 3]) -> Option<(Point, f64)> {
    // [n_x n_y 1] [x y r]^T = c
    let m = rows.map(|h| [h.normal[0], h.normal[1], 1.0, h.offset]);
    let det3 = |a: [[f64; 3]; 3]| {
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    };
    let a = [[m[0][0], m[0][1], m[0][2]], [m[1][0], m[1][1], m[1][2]], [m[2][0], m[2][1], m[2][2]]];
    let d = det3(a);
    if d.abs() < 1e-12 {
        return None;
    }
    let mut sol = [0.0; 3];
    for (col, s) in sol.iter_mut().enumerate() {
        let mut b = a;
        for row in 0..3 {
            b[row][col] = m[row][3];
        }
        *s = det3(b) / d;
    }
    Some(([sol[0], sol[1]], sol[2]))
}

fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = sub(b, a);
    let t = (dot(sub(p, a), ab) / dot(ab, ab)).clamp(0.0, 1.0);
    norm(sub(p, [a[0] + t * ab[0], a[1] + t * ab[1]]))
}

/// Signed area of (triangle 0, p, q) ∩ B_r(0).
fn triangle_disk_area(p: Point, q: Point, r: f64) -> f64 {
    let r2 = r * r;
    let sector = |u: Point, v: Point| 0.5 * r2 * cross2(u, v).atan2(dot(u, v));
    let tri = |u: Point, v: Point| 0.5 * cross2(u, v);
    let pin = dot(p, p) <= r2;
    let qin = dot(q, q) <= r2;
    if pin && qin {
        return tri(p, q);
    }
    let d = sub(q, p);
    let a = dot(d, d);
    if a == 0.0 {
        return 0.0;
    }
    let b = dot(p, d);
    let c = dot(p, p) - r2;
    let disc = b * b - a * c;
    let at = |t: f64| [p[0] + t * d[0], p[1] + t * d[1]];
    if disc <= 0.0 {
        return sector(p, q);
    }
    let sq = disc.sqrt();
    let t1 = (-b - sq) / a;
    let t2 = (-b + sq) / a;
    match (pin, qin) {
        (true, false) => {
            let s = at(t2.clamp(0.0, 1.0));
            tri(p, s) + sector(s, q)
        }
        (false, true) => {
            let s = at(t1.clamp(0.0, 1.0));
            sector(p, s) + tri(s, q)
        }
        _ => {
            if t1 > 0.0 && t2 < 1.0 && t1 < t2 {
                let s1 = at(t1);
                let s2 = at(t2);
                sector(p, s1) + tri(s1, s2) + sector(s2, q)
            } else {
                sector(p, q)
            }
        }
    }
}

/// Proof-derived upper/lower bounds on the Steiner area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteinerBounds {
    pub lower: f64,
    pub upper_mixed: f64,
    pub upper_small_r: Option<f64>,
    pub upper_large_r: Option<f64>,
}

impl SteinerBounds {
    pub fn contains(&self, value: f64, rel_tol: f64) -> bool {
        let slack = rel_tol * value.abs().max(1.0);
        value >= self.lower - slack
            && value <= self.upper_mixed + slack
            && self.upper_small_r.is_none_or(|u| value <= u + slack)
            && self.upper_large_r.is_none_or(|u| value <= u + slack)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WedgeDescriptor {
    pub apex: Point,
    pub dir_next: Point,
    pub dir_prev: Point,
    pub angle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerParams {
    pub alpha_min: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub wedges: Vec<WedgeDescriptor>,
}

/// Circular sector with apex, unit edge directions u (ccw start) and w, radius r;
/// the opening angle is below π.
#[derive(Debug, Clone, Copy)]
struct Sector {
    apex: Point,
    u: Point,
    w: Point,
    r: f64,
}

impl Sector {
    fn in_cone(&self, d: Point) -> bool {
        // u is the ccw-first direction, w the ccw-last
        cross2(self.u, d) >= 0.0 && cross2(d, self.w) >= 0.0
    }

    fn contains(&self, p: Point) -> bool {
        let d = sub(p, self.apex);
        dot(d, d) <= self.r * self.r && self.in_cone(d)
    }

    fn support(&self, n: Point) -> f64 {
        let base = dot(n, self.apex);
        let mut m = 0.0f64.max(dot(n, self.u)).max(dot(n, self.w));
        if self.in_cone(n) {
            m = m.max(1.0);
        }
        base + self.r * m
    }

    fn segments(&self) -> [(Point, Point); 2] {
        let a = self.apex;
        [
            (a, [a[0] + self.r * self.u[0], a[1] + self.r * self.u[1]]),
            (a, [a[0] + self.r * self.w[0], a[1] + self.r * self.w[1]]),
        ]
    }

    fn arc_hits_segment(&self, p: Point, q: Point) -> bool {
        let d = sub(q, p);
        let f = sub(p, self.apex);
        let a = dot(d, d);
        let b = dot(f, d);
        let c = dot(f, f) - self.r * self.r;
        let disc = b * b - a * c;
        if disc < 0.0 || a == 0.0 {
            return false;
        }
        let sq = disc.sqrt();
        [(-b - sq) / a, (-b + sq) / a].iter().any(|&t| {
            (0.0..=1.0).contains(&t) && self.in_cone([f[0] + t * d[0], f[1] + t * d[1]])
        })
    }

    fn arc_hits_arc(&self, o: &Sector) -> bool {
        let d = sub(o.apex, self.apex);
        let dist = norm(d);
        if dist == 0.0 || dist > self.r + o.r || dist < (self.r - o.r).abs() {
            return false;
        }
        let a = (self.r * self.r - o.r * o.r + dist * dist) / (2.0 * dist);
        let h = (self.r * self.r - a * a).max(0.0).sqrt();
        let m = [self.apex[0] + a * d[0] / dist, self.apex[1] + a * d[1] / dist];
        let off = [-d[1] / dist * h, d[0] / dist * h];
        [[m[0] + off[0], m[1] + off[1]], [m[0] - off[0], m[1] - off[1]]]
            .iter()
            .any(|&x| self.in_cone(sub(x, self.apex)) && o.in_cone(sub(x, o.apex)))
    }

    fn intersects(&self, o: &Sector) -> bool {
        if self.contains(o.apex) || o.contains(self.apex) {
            return true;
        }
        for (p, q) in self.segments() {
            for (s, t) in o.segments() {
                if segments_intersect(p, q, s, t) {
                    return true;
                }
            }
            if o.arc_hits_segment(p, q) {
                return true;
            }
        }
        for (s, t) in o.segments() {
            if self.arc_hits_segment(s, t) {
                return true;
            }
        }
        self.arc_hits_arc(o)
    }
}

fn segments_intersect(p: Point, q: Point, s: Point, t: Point) -> bool {
    let d1 = cross(s, t, p);
    let d2 = cross(s, t, q);
    let d3 = cross(p, q, s);
    let d4 = cross(p, q, t);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    // collinear overlap (adjacent wedges share an edge line)
    let on = |a: Point, b: Point, c: Point| {
        cross(a, b, c).abs() <= 1e-14 * (norm(sub(b, a)) + norm(sub(c, a))).powi(2)
            && c[0] >= a[0].min(b[0]) - 1e-15
            && c[0] <= a[0].max(b[0]) + 1e-15
            && c[1] >= a[1].min(b[1]) - 1e-15
            && c[1] <= a[1].max(b[1]) + 1e-15
    };
    // shared endpoints (touching) do not count as overlap
    let strictly_on = |a: Point, b: Point, c: Point| on(a, b, c) && c != a && c != b;
    strictly_on(s, t, p) || strictly_on(s, t, q) || strictly_on(p, q, s) || strictly_on(p, q, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn square_basics() {
        let sq = ConvexPolygon::unit_square();
        assert_eq!(sq.area(), 1.0);
        assert_eq!(sq.perimeter(), 4.0);
        assert!((sq.inradius() - 0.5).abs() < 1e-14);
        let r = ConvexPolygon::rectangle(3.0, 1.2).unwrap();
        assert!((r.inradius() - 0.6).abs() < 1e-14);
        let s: f64 = sq.angles().iter().sum();
        assert!((s - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_polygons() {
        assert!(matches!(ConvexPolygon::new(vec![[0.0, 0.0], [1.0, 0.0]]), Err(GeometryError::TooFewVertices(2))));
        // collinear vertex
        assert!(ConvexPolygon::new(vec![[0.0, 0.0], [0.5, 0.0], [1.0, 0.0], [0.0, 1.0]]).is_err());
        // clockwise
        assert!(ConvexPolygon::new(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]).is_err());
        // pentagram winds twice
        let star: Vec<Point> = (0..5)
            .map(|k| {
                let t = 4.0 * PI * k as f64 / 5.0;
                [t.cos(), t.sin()]
            })
            .collect();
        assert!(ConvexPolygon::new(star).is_err());
        let bad: Result<ConvexPolygon, _> = serde_json::from_str(r#"{"vertices":[[0,0],[1,0],[2,0]]}"#);
        assert!(bad.is_err());
        let good: ConvexPolygon = serde_json::from_str(r#"{"vertices":[[0,0],[1,0],[0,1]]}"#).unwrap();
        assert_eq!(good.area(), 0.5);
    }

    #[test]
    fn erosion_of_square() {
        let sq = ConvexPolygon::unit_square();
        assert!((sq.distance_level_volume(0.1).unwrap() - 0.36).abs() < 1e-14);
        assert!((sq.inner_parallel_perimeter(0.1).unwrap() - 3.2).abs() < 1e-14);
        assert!((sq.distance_level_volume(0.5).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(sq.inner_parallel_perimeter(0.0).unwrap(), 4.0);
        assert!(sq.distance_level_volume(0.6).is_err());
        assert!(sq.inner_parallel_perimeter(0.5).is_err());
        // tightness of the lower bound (1 − s/r) Per for the square
        assert!((3.2 - (1.0 - 0.2) * 4.0f64).abs() < 1e-14);
    }

    #[test]
    fn theta_of_square_and_triangle() {
        let sq = ConvexPolygon::unit_square();
        assert!((sq.theta_omega() - 4.0).abs() < 1e-12);
        let tri = ConvexPolygon::regular(3, 1.0).unwrap();
        assert!((tri.theta_omega() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn steiner_square() {
        let sq = ConvexPolygon::unit_square();
        assert!((sq.minkowski_ball_area(1.0).unwrap() - (5.0 + PI)).abs() < 1e-14);
        assert_eq!(sq.minkowski_ball_area(0.0).unwrap(), 1.0);
        assert!(sq.minkowski_ball_area(-1.0).is_err());
    }

    #[test]
    fn bishop_gromov_square() {
        let sq = ConvexPolygon::unit_square();
        let radii: Vec<f64> = (1..=10).map(|k| 0.05 * k as f64).collect();
        let prof = sq.bishop_gromov_profile([0.5, 0.5], &radii).unwrap();
        assert!(prof.iter().all(|v| (v - PI).abs() < 1e-13));
        let prof = sq.bishop_gromov_profile([0.0, 0.0], &radii).unwrap();
        assert!(prof.iter().all(|v| (v - PI / 4.0).abs() < 1e-13));
        assert!(sq.bishop_gromov_profile([2.0, 0.0], &radii).is_err());
        assert!(sq.bishop_gromov_profile([0.5, 0.5], &[0.2, 0.1]).is_err());
    }

    #[test]
    fn disk_area_whole_polygon() {
        let sq = ConvexPolygon::unit_square();
        assert!((sq.disk_intersection_area([0.3, 0.2], 5.0) - 1.0).abs() < 1e-13);
        // disk centered on an edge midpoint, radius 0.5: half disk
        assert!((sq.disk_intersection_area([0.5, 0.0], 0.5) - PI / 8.0).abs() < 1e-13);
    }

    #[test]
    fn corner_parameters() {
        let cp = ConvexPolygon::unit_square().corner_params();
        assert!((cp.alpha_min - PI / 2.0).abs() < 1e-14);
        assert!((cp.r - 0.25).abs() < 1e-10, "{}", cp.r);
        let hex = ConvexPolygon::regular(6, 1.0).unwrap().corner_params();
        assert!((hex.alpha_min - 2.0 * PI / 3.0).abs() < 1e-12);
        assert!(hex.r > 0.0);
    }

    #[test]
    fn inradius_bounds_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let p = ConvexPolygon::random(&mut rng, 9);
            let r = p.inradius();
            assert!(p.area() / p.perimeter() <= r * (1.0 + 1e-12));
            assert!(r <= 2.0 * p.area() / p.perimeter() * (1.0 + 1e-12));
            let (c, rc) = p.chebyshev_center();
            assert!((p.dist_to_boundary(c) - rc).abs() < 1e-10);
        }
    }

    proptest! {
        #[test]
        fn level_volume_bounded_by_layer(seed in any::<u64>(), frac in 0.0f64..1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = ConvexPolygon::random(&mut rng, 8);
            let s = frac * p.inradius();
            let v = p.distance_level_volume(s).unwrap();
            prop_assert!(v <= s * p.perimeter() * (1.0 + 1e-12) + 1e-14);
            let inner = p.inner_parallel_area(s).unwrap();
            prop_assert!((v + inner - p.area()).abs() <= 1e-12 * p.area());
        }

        #[test]
        fn eroded_perimeter_bounds(seed in any::<u64>(), frac in 0.0f64..0.999) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = ConvexPolygon::random(&mut rng, 7);
            let r = p.inradius();
            let s = frac * r;
            let per = p.inner_parallel_perimeter(s).unwrap();
            prop_assert!(per <= p.perimeter() * (1.0 + 1e-12));
            prop_assert!(per >= (1.0 - s / r) * p.perimeter() * (1.0 - 1e-10));
        }

        #[test]
        fn theta_between_bounds(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = ConvexPolygon::random(&mut rng, 6);
            let th = p.theta_omega();
            prop_assert!(th <= p.perimeter() * (1.0 + 1e-12));
            prop_assert!(th >= p.area() / p.inradius() * (1.0 - 1e-12));
        }

        #[test]
        fn scaling_homogeneity(seed in any::<u64>(), s in 0.1f64..10.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = ConvexPolygon::random(&mut rng, 6);
            let q = p.scaled(s).unwrap();
            prop_assert!((q.area() - s * s * p.area()).abs() <= 1e-12 * q.area());
            prop_assert!((q.perimeter() - s * p.perimeter()).abs() <= 1e-12 * q.perimeter());
            prop_assert!((q.inradius() - s * p.inradius()).abs() <= 1e-10 * q.inradius());
            prop_assert!((q.theta_omega() - s * p.theta_omega()).abs() <= 1e-10 * q.theta_omega());
        }

        #[test]
        fn steiner_within_bounds(seed in any::<u64>(), x in 0.0f64..5.0, c1 in 0.1f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = ConvexPolygon::random(&mut rng, 6);
            let r = x * p.inradius();
            let a = p.minkowski_ball_area(r).unwrap();
            prop_assert!(p.steiner_bounds(r, c1).contains(a, 1e-12));
        }

        #[test]
        fn perimeter_monotone_under_clipping(seed in any::<u64>(), angle in 0.0f64..(2.0 * PI), frac in 0.1f64..0.9) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = ConvexPolygon::random(&mut rng, 8);
            let n = [angle.cos(), angle.sin()];
            let vals: Vec<f64> = p.vertices().iter().map(|v| dot(n, *v)).collect();
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let ring = ConvexPolygon::clip_ring(p.vertices(), &HalfPlane { normal: n, offset: lo + frac * (hi - lo) });
            if let Ok(q) = ConvexPolygon::new(ring) {
                prop_assert!(q.perimeter() <= p.perimeter() * (1.0 + 1e-12));
            }
        }

        #[test]
        fn profile_nonincreasing(seed in any::<u64>(), u in 0.0f64..1.0, v in 0.0f64..1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = ConvexPolygon::random(&mut rng, 7);
            // random point of the closed polygon as a convex combination
            let vs = p.vertices();
            let a = vs[0];
            let b = vs[1 + ((vs.len() - 2) as f64 * u) as usize % (vs.len() - 2)];
            let c = vs[(vs.iter().position(|x| *x == b).unwrap() + 1) % vs.len()];
            let (s, t) = if u + v > 1.0 { (1.0 - u, 1.0 - v) } else { (u, v) };
            let pt = [a[0] + s * (b[0] - a[0]) + t * (c[0] - a[0]), a[1] + s * (b[1] - a[1]) + t * (c[1] - a[1])];
            let radii: Vec<f64> = (1..=50).map(|k| 0.08 * k as f64).collect();
            prop_assert!(p.bishop_gromov_profile(pt, &radii).is_ok());
        }
    }
}
