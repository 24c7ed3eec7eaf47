use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{dot, MarginalTable, Measure};
use crate::error::{Error, Result};
use crate::exec::Exec;

const CHUNK: usize = 8192;

/// Weighted point sample standing in for a measure on `R^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleCloud {
    dim: usize,
    points: Vec<f64>,
    weights: Option<Vec<f64>>,
}

impl SampleCloud {
    /// `points` is row-major (`len = m * dim`). Weights, if given, must be
    /// positive; they are rescaled to sum to 1.
    pub fn new(dim: usize, points: Vec<f64>, weights: Option<Vec<f64>>) -> Result<Self> {
        if dim == 0 || points.is_empty() || !points.len().is_multiple_of(dim) {
            return Err(Error::InvalidParameter(format!(
                "{} coordinates do not form points of dimension {dim}",
                points.len()
            )));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite sample coordinate".into()));
        }
        let m = points.len() / dim;
        let weights = match weights {
            None => None,
            Some(w) => {
                if w.len() != m || w.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                    return Err(Error::InvalidParameter("weights must be positive, one per point".into()));
                }
                let total: f64 = w.iter().sum();
                Some(w.into_iter().map(|x| x / total).collect())
            }
        };
        Ok(SampleCloud { dim, points, weights })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(|r| r.len()).unwrap_or(0);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidParameter("rows have differing dimensions".into()));
        }
        SampleCloud::new(dim, rows.concat(), None)
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    pub fn weight(&self, i: usize) -> f64 {
        match &self.weights {
            Some(w) => w[i],
            None => 1.0 / self.len() as f64,
        }
    }

    /// Image under `x -> a x + b`.
    pub fn affine_image(&self, a: &[Vec<f64>], b: &[f64]) -> Result<SampleCloud> {
        let n = self.dim;
        if a.len() != n || a.iter().any(|r| r.len() != n) || b.len() != n {
            return Err(Error::InvalidParameter("affine map has the wrong shape".into()));
        }
        let mut out = Vec::with_capacity(self.points.len());
        for p in self.points() {
            for i in 0..n {
                out.push(dot(&a[i], p) + b[i]);
            }
        }
        Ok(SampleCloud {
            dim: n,
            points: out,
            weights: self.weights.clone(),
        })
    }
}

impl Measure for SampleCloud {
    fn dim(&self) -> usize {
        self.dim
    }

    fn split_masses(&self, v: &[f64], r: f64) -> (f64, f64) {
        match &self.weights {
            None => {
                let (mut le, mut ge) = (0usize, 0usize);
                for p in self.points.chunks_exact(self.dim) {
                    let t = dot(v, p);
                    le += usize::from(t <= r);
                    ge += usize::from(t >= r);
                }
                let m = self.len() as f64;
                (le as f64 / m, ge as f64 / m)
            }
            Some(w) => {
                let (mut le, mut ge) = (0.0, 0.0);
                for (p, &wi) in self.points.chunks_exact(self.dim).zip(w) {
                    let t = dot(v, p);
                    if t <= r {
                        le += wi;
                    }
                    if t >= r {
                        ge += wi;
                    }
                }
                (le, ge)
            }
        }
    }

    fn barycenter(&self) -> Vec<f64> {
        let mut b = vec![0.0; self.dim];
        for (i, p) in self.points().enumerate() {
            let w = self.weight(i);
            for (bj, pj) in b.iter_mut().zip(p) {
                *bj += w * pj;
            }
        }
        b
    }

    fn sample_count(&self) -> Option<usize> {
        Some(self.len())
    }

    /// Freedman–Diaconis histogram of the projections.
    fn marginal_table(&self, v: &[f64]) -> Result<MarginalTable> {
        let t: Vec<f64> = self.points().map(|p| dot(v, p)).collect();
        let mut sorted = t.clone();
        sorted.sort_by(f64::total_cmp);
        let m = sorted.len();
        let (lo, hi) = (sorted[0], sorted[m - 1]);
        if !(hi > lo) {
            return Err(Error::DegenerateGeometry("all projections coincide".into()));
        }
        let q = |p: f64| sorted[((m - 1) as f64 * p).round() as usize];
        let iqr = q(0.75) - q(0.25);
        let width = 2.0 * iqr / (m as f64).cbrt();
        let bins = if width > 0.0 {
            (((hi - lo) / width).ceil() as usize).clamp(1, 100_000)
        } else {
            ((m as f64).log2().ceil() as usize + 1).max(1)
        };
        let h = (hi - lo) / bins as f64;
        let mut masses = vec![0.0; bins];
        for (i, &ti) in t.iter().enumerate() {
            let k = (((ti - lo) / h) as usize).min(bins - 1);
            masses[k] += self.weight(i);
        }
        let cuts = (0..=bins).map(|k| lo + h * k as f64).collect();
        Ok(MarginalTable {
            cuts,
            masses,
            rule: "Freedman-Diaconis histogram",
        })
    }
}

/// Draws `m` points of dimension `dim` with `draw`, in fixed-size chunks,
/// chunk `k` from stream `k` of the seed. The output does not depend on the
/// execution policy.
fn sample_chunks<F>(dim: usize, m: usize, seed: u64, exec: Exec, draw: F) -> Vec<f64>
where
    F: Fn(&mut ChaCha8Rng, &mut Vec<f64>) + Sync + Send,
{
    let chunks = m.div_ceil(CHUNK);
    let parts = exec.map_range(chunks, |k| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let count = CHUNK.min(m - k * CHUNK);
        let mut out = Vec::with_capacity(count * dim);
        for _ in 0..count {
            draw(&mut rng, &mut out);
        }
        out
    });
    parts.concat()
}

fn dirichlet_ones<R: Rng>(rng: &mut R, k: usize, out: &mut [f64]) {
    let mut total = 0.0;
    for o in out.iter_mut().take(k) {
        let e: f64 = Exp1.sample(rng);
        *o = e;
        total += e;
    }
    out.iter_mut().take(k).for_each(|o| *o /= total);
}

/// Uniform samples on the standard simplex `{x >= 0, sum x <= 1}`.
pub fn uniform_simplex(n: usize, m: usize, seed: u64, exec: Exec) -> Result<SampleCloud> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameter("simplex needs n >= 1 and m >= 1".into()));
    }
    let pts = sample_chunks(n, m, seed, exec, |rng, out| {
        let mut lam = vec![0.0; n + 1];
        dirichlet_ones(rng, n + 1, &mut lam);
        out.extend_from_slice(&lam[..n]);
    });
    SampleCloud::new(n, pts, None)
}

fn simplex_volume_factor(vertices: &[Vec<f64>]) -> f64 {
    let n = vertices[0].len();
    let m = DMatrix::from_fn(n, n, |i, j| vertices[j + 1][i] - vertices[0][i]);
    m.determinant().abs()
}

fn convex_hull_2d(points: &[Vec<f64>]) -> Vec<[f64; 2]> {
    let mut p: Vec<[f64; 2]> = points.iter().map(|v| [v[0], v[1]]).collect();
    p.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut hull: Vec<[f64; 2]> = Vec::new();
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 {
            Box::new(p.iter())
        } else {
            Box::new(p.iter().rev())
        };
        for &q in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], q) <= 0.0 {
                hull.pop();
            }
            hull.push(q);
        }
        hull.pop();
    }
    hull
}

/// Uniform samples on the convex hull of `vertices`: any dimension when there
/// are exactly `n + 1` affinely independent vertices, any vertex count in the
/// plane (and on the line).
pub fn uniform_polytope(vertices: &[Vec<f64>], m: usize, seed: u64, exec: Exec) -> Result<SampleCloud> {
    let n = vertices.first().map(|v| v.len()).unwrap_or(0);
    if n == 0 || vertices.iter().any(|v| v.len() != n) {
        return Err(Error::DegenerateGeometry("vertices must share a positive dimension".into()));
    }
    if n == 1 {
        let lo = vertices.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min);
        let hi = vertices.iter().map(|v| v[0]).fold(f64::NEG_INFINITY, f64::max);
        if !(hi > lo) {
            return Err(Error::DegenerateGeometry("segment has zero length".into()));
        }
        let pts = sample_chunks(1, m, seed, exec, |rng, out| out.push(rng.random_range(lo..hi)));
        return SampleCloud::new(1, pts, None);
    }
    if vertices.len() == n + 1 {
        let scale = vertices
            .iter()
            .flat_map(|v| v.iter())
            .fold(0.0f64, |a, x| a.max(x.abs()))
            .max(1.0);
        if simplex_volume_factor(vertices) <= 1e-12 * scale.powi(n as i32) {
            return Err(Error::DegenerateGeometry("simplex vertices are affinely dependent".into()));
        }
        let verts = vertices.to_vec();
        let pts = sample_chunks(n, m, seed, exec, move |rng, out| {
            let mut lam = vec![0.0; n + 1];
            dirichlet_ones(rng, n + 1, &mut lam);
            for i in 0..n {
                out.push(verts.iter().zip(&lam).map(|(v, l)| l * v[i]).sum());
            }
        });
        return SampleCloud::new(n, pts, None);
    }
    if n != 2 {
        return Err(Error::Unsupported(
            "polytopes beyond simplices are supported in dimension 2 only".into(),
        ));
    }
    let hull = convex_hull_2d(vertices);
    if hull.len() < 3 {
        return Err(Error::DegenerateGeometry("polygon has empty interior".into()));
    }
    let tris: Vec<[[f64; 2]; 3]> = (1..hull.len() - 1).map(|i| [hull[0], hull[i], hull[i + 1]]).collect();
    let areas: Vec<f64> = tris
        .iter()
        .map(|t| 0.5 * ((t[1][0] - t[0][0]) * (t[2][1] - t[0][1]) - (t[1][1] - t[0][1]) * (t[2][0] - t[0][0])).abs())
        .collect();
    let total: f64 = areas.iter().sum();
    if total <= 1e-14 {
        return Err(Error::DegenerateGeometry("polygon has zero area".into()));
    }
    let cumulative: Vec<f64> = areas
        .iter()
        .scan(0.0, |acc, a| {
            *acc += a / total;
            Some(*acc)
        })
        .collect();
    let pts = sample_chunks(2, m, seed, exec, move |rng, out| {
        let u: f64 = rng.random();
        let k = cumulative.partition_point(|&c| c < u).min(tris.len() - 1);
        let t = tris[k];
        let mut lam = [0.0; 3];
        dirichlet_ones(rng, 3, &mut lam);
        out.extend((0..2).map(|i| lam[0] * t[0][i] + lam[1] * t[1][i] + lam[2] * t[2][i]));
    });
    SampleCloud::new(2, pts, None)
}

/// Gaussian samples `mean + L z` with `L L^T = covariance`.
pub fn gaussian(mean: &[f64], covariance: &[Vec<f64>], m: usize, seed: u64, exec: Exec) -> Result<SampleCloud> {
    let n = mean.len();
    if n == 0 || covariance.len() != n || covariance.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidParameter("covariance must be n x n".into()));
    }
    let cov = DMatrix::from_fn(n, n, |i, j| covariance[i][j]);
    if (&cov - cov.transpose()).abs().max() > 1e-12 * cov.abs().max().max(1.0) {
        return Err(Error::InvalidParameter("covariance is not symmetric".into()));
    }
    let chol = cov
        .cholesky()
        .ok_or_else(|| Error::InvalidParameter("covariance is not positive definite".into()))?;
    let l = chol.l();
    let mu = DVector::from_column_slice(mean);
    let pts = sample_chunks(n, m, seed, exec, move |rng, out| {
        let z = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
        let x = &mu + &l * z;
        out.extend(x.iter());
    });
    SampleCloud::new(n, pts, None)
}

/// Uniform samples on the cone over `base` with tip `apex`. The base is an
/// `(n-1)`-simplex given by `n` vertices, or a convex polygon (vertices in
/// order) when `n = 3`.
pub fn cone_uniform(base: &[Vec<f64>], apex: &[f64], m: usize, seed: u64, exec: Exec) -> Result<SampleCloud> {
    let n = apex.len();
    if n < 2 || base.len() < n || base.iter().any(|v| v.len() != n) {
        return Err(Error::DegenerateGeometry("cone base must have at least n vertices in R^n".into()));
    }
    if base.len() > n && n != 3 {
        return Err(Error::Unsupported("non-simplex cone bases are supported in R^3 only".into()));
    }
    let mut check: Vec<Vec<f64>> = base[..n].to_vec();
    check.push(apex.to_vec());
    if simplex_volume_factor(&check) <= 1e-12 {
        return Err(Error::DegenerateGeometry("apex lies in the base hyperplane".into()));
    }
    // fan triangulation of the base, weighted by area
    let pieces: Vec<Vec<Vec<f64>>> = if base.len() == n {
        vec![base.to_vec()]
    } else {
        (1..base.len() - 1)
            .map(|i| vec![base[0].clone(), base[i].clone(), base[i + 1].clone()])
            .collect()
    };
    let areas: Vec<f64> = pieces
        .iter()
        .map(|p| {
            if p.len() == 3 && n == 3 {
                let a: Vec<f64> = (0..3).map(|i| p[1][i] - p[0][i]).collect();
                let b: Vec<f64> = (0..3).map(|i| p[2][i] - p[0][i]).collect();
                let c = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
                dot(&c, &c).sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let total: f64 = areas.iter().sum();
    let cumulative: Vec<f64> = areas
        .iter()
        .scan(0.0, |acc, a| {
            *acc += a / total;
            Some(*acc)
        })
        .collect();
    let apex = apex.to_vec();
    let pts = sample_chunks(n, m, seed, exec, move |rng, out| {
        let u: f64 = rng.random();
        let k = cumulative.partition_point(|&c| c < u).min(pieces.len() - 1);
        let piece = &pieces[k];
        let mut lam = vec![0.0; piece.len()];
        let len = lam.len();
        dirichlet_ones(rng, len, &mut lam);
        // distance from the apex has density proportional to t^(n-1)
        let t = rng.random::<f64>().powf(1.0 / n as f64);
        for i in 0..n {
            let b: f64 = piece.iter().zip(&lam).map(|(v, l)| l * v[i]).sum();
            out.push(apex[i] + t * (b - apex[i]));
        }
    });
    SampleCloud::new(n, pts, None)
}
