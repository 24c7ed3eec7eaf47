use serde::{Deserialize, Serialize};

use super::{Measure, MarginalTable};
use crate::error::{Error, Result};

/// Piecewise-constant density on a rectilinear grid in dimension `n <= 3`.
///
/// `values` are cell averages (row-major, last axis fastest), stored
/// normalized so that `sum value * cell volume = 1`. Halfspace and box masses
/// are computed exactly for this piecewise-constant model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDensityND {
    edges: Vec<Vec<f64>>,
    values: Vec<f64>,
    raw_mass: f64,
    #[serde(skip)]
    cells: Vec<Cell>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Cell {
    lo: [f64; 3],
    width: [f64; 3],
    mass: f64,
}

fn cell_count(edges: &[Vec<f64>]) -> usize {
    edges.iter().map(|e| e.len() - 1).product()
}

/// Multi-index of flat cell `k`.
fn unflatten(edges: &[Vec<f64>], mut k: usize) -> [usize; 3] {
    let mut idx = [0usize; 3];
    for d in (0..edges.len()).rev() {
        let len = edges[d].len() - 1;
        idx[d] = k % len;
        k /= len;
    }
    idx
}

impl GridDensityND {
    pub fn new(edges: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        let n = edges.len();
        if n == 0 || n > 3 {
            return Err(Error::Unsupported(format!("grid densities need 1 <= n <= 3, got {n}")));
        }
        for e in &edges {
            if e.len() < 2 || e.windows(2).any(|w| !(w[0] < w[1])) || e.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidDensity("axis edges must be finite and strictly increasing".into()));
            }
        }
        if values.len() != cell_count(&edges) {
            return Err(Error::InvalidDensity(format!(
                "expected {} cell values, got {}",
                cell_count(&edges),
                values.len()
            )));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidDensity("cell values must be finite and nonnegative".into()));
        }
        let mut g = GridDensityND {
            edges,
            values,
            raw_mass: 0.0,
            cells: Vec::new(),
        };
        let mut raw = 0.0;
        for k in 0..g.values.len() {
            raw += g.values[k] * g.cell_geometry(k).1.iter().take(n).product::<f64>();
        }
        if !(raw > 0.0) {
            return Err(Error::ZeroMass);
        }
        g.raw_mass = raw;
        g.values.iter_mut().for_each(|v| *v /= raw);
        g.build_cells();
        Ok(g)
    }

    fn cell_geometry(&self, k: usize) -> ([f64; 3], [f64; 3]) {
        let idx = unflatten(&self.edges, k);
        let mut lo = [0.0; 3];
        let mut w = [1.0; 3];
        for d in 0..self.edges.len() {
            lo[d] = self.edges[d][idx[d]];
            w[d] = self.edges[d][idx[d] + 1] - lo[d];
        }
        (lo, w)
    }

    fn build_cells(&mut self) {
        let n = self.edges.len();
        self.cells = (0..self.values.len())
            .filter(|&k| self.values[k] > 0.0)
            .map(|k| {
                let (lo, width) = self.cell_geometry(k);
                Cell {
                    lo,
                    width,
                    mass: self.values[k] * width.iter().take(n).product::<f64>(),
                }
            })
            .collect();
    }

    /// Rebuilds the cached cell table (after deserialization).
    pub fn rebuilt(mut self) -> Self {
        self.build_cells();
        self
    }

    /// Midpoint-rule cell values of `f`.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(edges: Vec<Vec<f64>>, f: F) -> Result<Self> {
        let n = edges.len();
        let count = if n == 0 { 0 } else { cell_count(&edges) };
        let mut values = Vec::with_capacity(count);
        for k in 0..count {
            let idx = unflatten(&edges, k);
            let mid: Vec<f64> = (0..n).map(|d| 0.5 * (edges[d][idx[d]] + edges[d][idx[d] + 1])).collect();
            values.push(f(&mid));
        }
        GridDensityND::new(edges, values)
    }

    /// Uniform density on the standard simplex `{x >= 0, sum x <= 1}`; each
    /// value is the exact fraction of its cell inside the simplex.
    pub fn uniform_simplex(n: usize, cells_per_axis: usize) -> Result<Self> {
        let axis = uniform_edges(0.0, 1.0, cells_per_axis);
        let edges = vec![axis; n];
        let ones = vec![1.0; n];
        let count = if n == 0 { 0 } else { cell_count(&edges) };
        let mut values = Vec::with_capacity(count);
        for k in 0..count {
            let idx = unflatten(&edges, k);
            let mut lo = [0.0; 3];
            let mut w = [1.0; 3];
            for d in 0..n {
                lo[d] = edges[d][idx[d]];
                w[d] = edges[d][idx[d] + 1] - lo[d];
            }
            let vol: f64 = w.iter().take(n).product();
            values.push(box_halfspace_volume(&lo, &w, n, &ones, 1.0) / vol);
        }
        GridDensityND::new(edges, values)
    }

    /// Uniform density on the box `[lo, hi]`.
    pub fn uniform_box(lo: &[f64], hi: &[f64], cells_per_axis: usize) -> Result<Self> {
        let edges: Vec<Vec<f64>> = lo.iter().zip(hi).map(|(&a, &b)| uniform_edges(a, b, cells_per_axis)).collect();
        GridDensityND::from_fn(edges, |_| 1.0)
    }

    pub fn dim(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Vec<f64>] {
        &self.edges
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mass before normalization.
    pub fn raw_mass(&self) -> f64 {
        self.raw_mass
    }

    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.edges.iter().map(|e| e[0]).collect(),
            self.edges.iter().map(|e| e[e.len() - 1]).collect(),
        )
    }

    /// Exact mass of the box `[lo, hi]`.
    pub fn box_mass(&self, lo: &[f64], hi: &[f64]) -> f64 {
        let n = self.dim();
        self.cells
            .iter()
            .map(|c| {
                let mut frac = 1.0;
                for d in 0..n {
                    let a = c.lo[d].max(lo[d]);
                    let b = (c.lo[d] + c.width[d]).min(hi[d]);
                    if b <= a {
                        return 0.0;
                    }
                    frac *= (b - a) / c.width[d];
                }
                c.mass * frac
            })
            .sum()
    }

    /// Masses of the slabs between consecutive `cuts` of `<v, x>`.
    fn slab_masses(&self, v: &[f64], cuts: &[f64]) -> Vec<f64> {
        let below: Vec<f64> = cuts.iter().map(|&t| self.split_masses(v, t).0).collect();
        below.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect()
    }
}

pub(crate) fn uniform_edges(a: f64, b: f64, cells: usize) -> Vec<f64> {
    let cells = cells.max(1);
    (0..=cells).map(|i| a + (b - a) * i as f64 / cells as f64).collect()
}

/// Volume of `{y in lo + [0, w] : <v, y> <= r}` for `n <= 3`.
///
/// Inclusion–exclusion over the box corners. Directions along which the box
/// is negligibly thin in `<v, .>` are averaged out (second-order accurate),
/// which keeps the alternating sum well conditioned.
pub fn box_halfspace_volume(lo: &[f64; 3], w: &[f64; 3], n: usize, v: &[f64], r: f64) -> f64 {
    let mut t = r;
    let span: f64 = (0..n).map(|i| v[i].abs() * w[i]).sum();
    let mut a = [0.0; 3];
    let mut h = [0.0; 3];
    let mut k = 0;
    let mut passive = 1.0;
    for i in 0..n {
        t -= v[i] * lo[i];
        let mut ai = v[i];
        if ai < 0.0 {
            t -= ai * w[i];
            ai = -ai;
        }
        if ai * w[i] <= 1e-9 * span || ai == 0.0 {
            passive *= w[i];
            t -= 0.5 * ai * w[i];
        } else {
            a[k] = ai;
            h[k] = w[i];
            k += 1;
        }
    }
    if k == 0 {
        return if t >= 0.0 { passive } else { 0.0 };
    }
    let full: f64 = h.iter().take(k).product();
    let reach: f64 = (0..k).map(|i| a[i] * h[i]).sum();
    if t <= 0.0 {
        return 0.0;
    }
    if t >= reach {
        return passive * full;
    }
    let denom: f64 = (1..=k).map(|i| i as f64).product::<f64>() * a.iter().take(k).product::<f64>();
    let mut vol = 0.0;
    for mask in 0..(1usize << k) {
        let mut shift = 0.0;
        let mut sign = 1.0;
        for i in 0..k {
            if mask & (1 << i) != 0 {
                shift += a[i] * h[i];
                sign = -sign;
            }
        }
        let u = t - shift;
        if u > 0.0 {
            vol += sign * u.powi(k as i32);
        }
    }
    passive * (vol / denom).clamp(0.0, full)
}

impl Measure for GridDensityND {
    fn dim(&self) -> usize {
        self.edges.len()
    }

    fn split_masses(&self, v: &[f64], r: f64) -> (f64, f64) {
        let n = self.dim();
        let le: f64 = self
            .cells
            .iter()
            .map(|c| {
                let vol: f64 = c.width.iter().take(n).product();
                c.mass * box_halfspace_volume(&c.lo, &c.width, n, v, r) / vol
            })
            .sum();
        let le = le.clamp(0.0, 1.0);
        (le, 1.0 - le)
    }

    fn barycenter(&self) -> Vec<f64> {
        let n = self.dim();
        let mut b = vec![0.0; n];
        for c in &self.cells {
            for (d, bd) in b.iter_mut().enumerate() {
                *bd += c.mass * (c.lo[d] + 0.5 * c.width[d]);
            }
        }
        b
    }

    fn marginal_table(&self, v: &[f64]) -> Result<MarginalTable> {
        let n = self.dim();
        let axis = (0..n).find(|&i| v[i].abs() == 1.0 && (0..n).all(|j| j == i || v[j] == 0.0));
        let (lo, hi) = self.bounds();
        let (cuts, masses, rule) = if let Some(i) = axis {
            let sign = v[i];
            let e = &self.edges[i];
            let mut masses = vec![0.0; e.len() - 1];
            for c in &self.cells {
                let j = e.partition_point(|&x| x <= c.lo[i]) - 1;
                masses[j] += c.mass;
            }
            let mut cuts: Vec<f64> = e.iter().map(|x| sign * x).collect();
            if sign < 0.0 {
                cuts.reverse();
                masses.reverse();
            }
            (cuts, masses, "grid cell columns")
        } else {
            let corners = 1usize << n;
            let mut tmin = f64::INFINITY;
            let mut tmax = f64::NEG_INFINITY;
            for m in 0..corners {
                let t: f64 = (0..n).map(|d| v[d] * if m & (1 << d) != 0 { hi[d] } else { lo[d] }).sum();
                tmin = tmin.min(t);
                tmax = tmax.max(t);
            }
            let cuts = uniform_edges(tmin, tmax, 512);
            let masses = self.slab_masses(v, &cuts);
            (cuts, masses, "exact slab masses, 512 bins")
        };
        Ok(MarginalTable { cuts, masses, rule })
    }
}
