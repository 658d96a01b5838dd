//! Piecewise Chebyshev–Lobatto tabulation on a fixed panel layout: spectral
//! interpolation, cumulative integration and differentiation per panel.

use std::io::Write;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

/// Panel breakpoints plus the per-panel reference matrices.
#[derive(Debug)]
pub struct PanelGrid {
    breaks: Vec<f64>,
    n: usize,
    ref_nodes: Vec<f64>,
    bary: Vec<f64>,
    /// n×n row-major: values ↦ ∫_{−1}^{x_i}
    cum: Vec<f64>,
    /// n×n row-major: values ↦ derivative at x_i
    diff: Vec<f64>,
}

impl PanelGrid {
    /// `breaks` must be strictly increasing; `n` >= 3 nodes per panel.
    pub fn new(breaks: Vec<f64>, n: usize) -> Arc<Self> {
        assert!(n >= 3 && breaks.len() >= 2);
        assert!(breaks.windows(2).all(|w| w[1] > w[0]), "panel breaks must increase");
        let m = n - 1;
        let ref_nodes: Vec<f64> = (0..n).map(|j| -(std::f64::consts::PI * j as f64 / m as f64).cos()).collect();
        let bary: Vec<f64> = (0..n)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == m {
                    0.5 * s
                } else {
                    s
                }
            })
            .collect();
        let cheb = |k: usize, x: f64| (k as f64 * x.clamp(-1.0, 1.0).acos()).cos();
        let v = DMatrix::from_fn(n, n, |j, k| cheb(k, ref_nodes[j]));
        let vinv = v.try_inverse().expect("Chebyshev–Lobatto Vandermonde is invertible");
        let anti = |k: usize, x: f64| match k {
            0 => x,
            1 => 0.5 * x * x,
            _ => 0.5 * (cheb(k + 1, x) / (k + 1) as f64 - cheb(k - 1, x) / (k - 1) as f64),
        };
        let e = DMatrix::from_fn(n, n, |j, k| anti(k, ref_nodes[j]) - anti(k, -1.0));
        let cum_m = e * vinv;
        let mut cum = vec![0.0; n * n];
        let mut diff = vec![0.0; n * n];
        for i in 0..n {
            let mut diag = 0.0;
            for j in 0..n {
                cum[i * n + j] = cum_m[(i, j)];
                if i != j {
                    let d = bary[j] / bary[i] / (ref_nodes[i] - ref_nodes[j]);
                    diff[i * n + j] = d;
                    diag -= d;
                }
            }
            diff[i * n + i] = diag;
        }
        Arc::new(PanelGrid { breaks, n, ref_nodes, bary, cum, diff })
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }
    pub fn nodes_per_panel(&self) -> usize {
        self.n
    }
    pub fn num_panels(&self) -> usize {
        self.breaks.len() - 1
    }

    /// All nodes, panel-major (shared panel endpoints appear twice).
    pub fn nodes(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_panels() * self.n);
        for w in self.breaks.windows(2) {
            let (c, h) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
            out.extend(self.ref_nodes.iter().map(|x| c + h * x));
        }
        out
    }

    fn panel_of(&self, x: f64) -> usize {
        self.breaks.partition_point(|&b| b <= x).saturating_sub(1).min(self.num_panels() - 1)
    }
}

/// A function tabulated on a `PanelGrid`, zero to the left of the grid and equal
/// to `right_tail` to the right of it.
#[derive(Debug, Clone)]
pub struct PanelFunction {
    grid: Arc<PanelGrid>,
    values: Vec<f64>,
    right_tail: f64,
}

impl PanelFunction {
    pub fn from_fn<F: Fn(f64) -> f64 + Sync + Send>(grid: &Arc<PanelGrid>, f: F) -> Self {
        let values = grid.nodes().into_par_iter().map(f).collect();
        PanelFunction { grid: grid.clone(), values, right_tail: 0.0 }
    }

    pub fn grid(&self) -> &Arc<PanelGrid> {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Pointwise map v ↦ f(x, v); the right tail is mapped with x = +∞.
    pub fn map<F: Fn(f64, f64) -> f64>(&self, f: F) -> Self {
        let values = self.grid.nodes().into_iter().zip(&self.values).map(|(x, &v)| f(x, v)).collect();
        PanelFunction { grid: self.grid.clone(), values, right_tail: f(f64::INFINITY, self.right_tail) }
    }

    /// a·self + b·other (same grid).
    pub fn combine(&self, a: f64, other: &PanelFunction, b: f64) -> Self {
        assert!(Arc::ptr_eq(&self.grid, &other.grid), "panel functions live on different grids");
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        PanelFunction { grid: self.grid.clone(), values, right_tail: a * self.right_tail + b * other.right_tail }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let g = &*self.grid;
        if x < g.breaks[0] {
            return 0.0;
        }
        if x > *g.breaks.last().unwrap() {
            return self.right_tail;
        }
        let p = g.panel_of(x);
        let (a, b) = (g.breaks[p], g.breaks[p + 1]);
        let t = (2.0 * x - a - b) / (b - a);
        let vals = &self.values[p * g.n..(p + 1) * g.n];
        let (mut num, mut den) = (0.0, 0.0);
        for j in 0..g.n {
            let d = t - g.ref_nodes[j];
            if d == 0.0 {
                return vals[j];
            }
            let w = g.bary[j] / d;
            num += w * vals[j];
            den += w;
        }
        num / den
    }

    /// x ↦ ∫_{−∞}^x f (the grid's left end stands in for −∞).
    pub fn cumulative(&self) -> Self {
        let g = &*self.grid;
        let n = g.n;
        let mut values = Vec::with_capacity(self.values.len());
        let mut offset = 0.0;
        for (p, w) in g.breaks.windows(2).enumerate() {
            let h = 0.5 * (w[1] - w[0]);
            let vals = &self.values[p * n..(p + 1) * n];
            let mut last = 0.0;
            for i in 0..n {
                let s: f64 = (0..n).map(|j| g.cum[i * n + j] * vals[j]).sum();
                last = offset + h * s;
                values.push(last);
            }
            offset = last;
        }
        PanelFunction { grid: self.grid.clone(), values, right_tail: offset }
    }

    /// Antiderivative of a function with zero total integral, vanishing at both
    /// ends: accumulated from −T for x <= 0 and from +T for x > 0, so neither
    /// tail inherits cancellation error from the other half.
    pub fn balanced_antiderivative(&self) -> Self {
        let left = self.cumulative();
        let g = &*self.grid;
        let n = g.n;
        let np = g.num_panels();
        let mut values = vec![0.0; self.values.len()];
        let mut offset = 0.0; // ∫_{b_{p+1}}^{T} f
        for p in (0..np).rev() {
            let h = 0.5 * (g.breaks[p + 1] - g.breaks[p]);
            let vals = &self.values[p * n..(p + 1) * n];
            let partial: Vec<f64> = (0..n).map(|i| h * (0..n).map(|j| g.cum[i * n + j] * vals[j]).sum::<f64>()).collect();
            let whole = partial[n - 1];
            for i in 0..n {
                let x = g.breaks[p] + h * (1.0 + g.ref_nodes[i]);
                values[p * n + i] = if x <= 0.0 { left.values[p * n + i] } else { -(offset + whole - partial[i]) };
            }
            offset += whole;
        }
        PanelFunction { grid: self.grid.clone(), values, right_tail: 0.0 }
    }

    pub fn integral(&self) -> f64 {
        let g = &*self.grid;
        let n = g.n;
        g.breaks
            .windows(2)
            .enumerate()
            .map(|(p, w)| {
                let h = 0.5 * (w[1] - w[0]);
                h * (0..n).map(|j| g.cum[(n - 1) * n + j] * self.values[p * n + j]).sum::<f64>()
            })
            .sum()
    }

    pub fn derivative(&self) -> Self {
        let g = &*self.grid;
        let n = g.n;
        let mut values = Vec::with_capacity(self.values.len());
        for (p, w) in g.breaks.windows(2).enumerate() {
            let h = 0.5 * (w[1] - w[0]);
            let vals = &self.values[p * n..(p + 1) * n];
            for i in 0..n {
                values.push((0..n).map(|j| g.diff[i * n + j] * vals[j]).sum::<f64>() / h);
            }
        }
        PanelFunction { grid: self.grid.clone(), values, right_tail: 0.0 }
    }

    /// max |f| over the nodes.
    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `tau,value` rows at the grid nodes (duplicated panel endpoints skipped).
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["tau", "value"])?;
        let n = self.grid.n;
        for (i, (x, v)) in self.grid.nodes().iter().zip(&self.values).enumerate() {
            if i % n == 0 && i > 0 {
                continue;
            }
            wr.write_record([format!("{x:.16e}"), format!("{v:.16e}")])?;
        }
        wr.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(a: f64, b: f64, panels: usize) -> Vec<f64> {
        (0..=panels).map(|i| a + (b - a) * i as f64 / panels as f64).collect()
    }

    #[test]
    fn spectral_accuracy_on_gaussian() {
        let g = PanelGrid::new(uniform(-10.0, 10.0, 40), 20);
        let f = PanelFunction::from_fn(&g, |x| (-x * x).exp());
        let sqrt_pi = std::f64::consts::PI.sqrt();
        assert!((f.integral() - sqrt_pi).abs() < 1e-14);
        let c = f.cumulative();
        for &x in &[-1.3, 0.0, 0.77, 2.5] {
            assert!((f.eval(x) - (-x * x).exp()).abs() < 1e-14);
            // ∫_{−∞}^x e^{−s²} = √π/2 (1 + erf x); compare derivative instead of erf
            assert!((c.derivative().eval(x) - (-x * x).exp()).abs() < 1e-11);
        }
        assert!((c.eval(0.0) - sqrt_pi / 2.0).abs() < 1e-14);
        assert_eq!(c.eval(11.0), c.right_tail);
        assert_eq!(f.eval(-11.0), 0.0);
        let d = f.derivative();
        assert!((d.eval(0.4) + 0.8 * (-0.16f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn csv_skips_duplicate_endpoints() {
        let g = PanelGrid::new(uniform(0.0, 1.0, 2), 3);
        let f = PanelFunction::from_fn(&g, |x| x);
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + 5);
    }
}
