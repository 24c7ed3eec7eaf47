use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::optimize::NelderMead;
use super::{dot, normalize, Measure, Side};
use crate::core1d::{grunbaum_bound, ConcavityClass};
use crate::error::{Error, Result};
use crate::exec::Exec;

/// Search budget for the depth minimization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthConfig {
    /// Base directions on the sphere (both orientations are evaluated).
    pub directions: usize,
    pub refine: bool,
    /// Number of best base directions used as refinement starts.
    pub refine_starts: usize,
    /// Objective evaluations per refinement start.
    pub refine_evals: usize,
    pub seed: u64,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for DepthConfig {
    fn default() -> Self {
        DepthConfig {
            directions: 720,
            refine: true,
            refine_starts: 5,
            refine_evals: 150,
            seed: 0,
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthReport {
    pub point: Vec<f64>,
    pub depth: f64,
    /// Normal of the minimizing halfspace (through `point`).
    pub direction: Vec<f64>,
    pub side: Side,
    /// All directions evaluated, lattice plus refinement.
    pub direction_count: usize,
    pub base_directions: usize,
    pub mc_samples: Option<usize>,
    /// 95% normal-approximation half-width of the Monte Carlo mass.
    pub half_width: f64,
    pub seed: u64,
    /// `(angle, min(side masses))` over the base directions in the plane.
    pub profile: Option<Vec<(f64, f64)>>,
}

/// Quasi-uniform unit directions: equally spaced angles in the plane
/// (doubling the count refines the set), a Fibonacci lattice in `R^3`,
/// seeded Gaussian directions beyond.
pub fn direction_set(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let count = count.max(1);
    match n {
        1 => vec![vec![1.0]],
        2 => (0..count)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / count as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let z = 1.0 - (2.0 * k as f64 + 1.0) / count as f64;
                    let r = (1.0 - z * z).max(0.0).sqrt();
                    let a = golden * k as f64;
                    vec![r * a.cos(), r * a.sin(), z]
                })
                .collect()
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..count)
                .map(|_| loop {
                    let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
                    if normalize(&mut v) > 1e-12 {
                        break v;
                    }
                })
                .collect()
        }
    }
}

fn side_min<M: Measure + ?Sized>(mu: &M, x: &[f64], v: &[f64]) -> (f64, Side) {
    let (le, ge) = mu.split_masses(v, dot(v, x));
    if le <= ge {
        (le, Side::Le)
    } else {
        (ge, Side::Ge)
    }
}

fn report_base<M: Measure + ?Sized>(mu: &M, x: &[f64], dirs: &[Vec<f64>], exec: Exec, seed: u64) -> (DepthReport, Vec<f64>) {
    let evals = exec.map(dirs, |v| side_min(mu, x, v));
    let (best, &(depth, side)) = evals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
        .expect("at least one direction");
    let profile = (mu.dim() == 2).then(|| {
        dirs.iter()
            .zip(&evals)
            .map(|(v, (m, _))| (v[1].atan2(v[0]), *m))
            .collect()
    });
    let masses = evals.iter().map(|e| e.0).collect();
    let mut r = DepthReport {
        point: x.to_vec(),
        depth,
        direction: dirs[best].clone(),
        side,
        direction_count: dirs.len(),
        base_directions: dirs.len(),
        mc_samples: mu.sample_count(),
        half_width: 0.0,
        seed,
        profile,
    };
    r.half_width = half_width(r.depth, r.mc_samples);
    (r, masses)
}

fn half_width(p: f64, m: Option<usize>) -> f64 {
    match m {
        Some(m) if m > 0 => 1.96 * (p * (1.0 - p) / m as f64).sqrt(),
        _ => 0.0,
    }
}

/// Depth over an explicit direction set, without refinement.
pub fn tukey_depth_with_directions<M: Measure + ?Sized>(mu: &M, x: &[f64], dirs: &[Vec<f64>], exec: Exec) -> Result<DepthReport> {
    if x.len() != mu.dim() || dirs.is_empty() || dirs.iter().any(|d| d.len() != mu.dim()) {
        return Err(Error::InvalidParameter("point and directions must match the dimension".into()));
    }
    let unit: Vec<Vec<f64>> = dirs
        .iter()
        .map(|d| {
            let mut d = d.clone();
            normalize(&mut d);
            d
        })
        .collect();
    Ok(report_base(mu, x, &unit, exec, 0).0)
}

/// Orthonormal basis of the complement of unit `v`.
fn tangent_basis(v: &[f64]) -> Vec<Vec<f64>> {
    let n = v.len();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        let p = dot(&e, v);
        e.iter_mut().zip(v).for_each(|(a, b)| *a -= p * b);
        for b in &basis {
            let p = dot(&e, b);
            e.iter_mut().zip(b).for_each(|(a, c)| *a -= p * c);
        }
        if normalize(&mut e) > 1e-6 {
            basis.push(e);
        }
        if basis.len() + 1 == n {
            break;
        }
    }
    basis
}

/// Upper estimate of the Tukey depth of `x`: minimum closed-halfspace mass
/// over a quasi-uniform direction set, refined by Nelder–Mead on the sphere
/// around the best few directions.
pub fn tukey_depth<M: Measure + ?Sized>(mu: &M, x: &[f64], cfg: &DepthConfig) -> Result<DepthReport> {
    let n = mu.dim();
    if x.len() != n {
        return Err(Error::InvalidParameter("point has the wrong dimension".into()));
    }
    let dirs = direction_set(n, cfg.directions, cfg.seed);
    let (mut report, masses) = report_base(mu, x, &dirs, cfg.exec, cfg.seed);
    report.seed = cfg.seed;
    if !cfg.refine || n < 2 || cfg.refine_starts == 0 {
        return Ok(report);
    }
    let mut order: Vec<usize> = (0..dirs.len()).collect();
    order.sort_by(|&a, &b| masses[a].total_cmp(&masses[b]));
    order.truncate(cfg.refine_starts);
    let step = std::f64::consts::TAU / (dirs.len() as f64).powf(1.0 / (n - 1) as f64);
    let nm = NelderMead {
        max_evals: cfg.refine_evals,
        xtol: 1e-9,
        ftol: 0.0,
    };
    let starts: Vec<Vec<f64>> = order.iter().map(|&i| dirs[i].clone()).collect();
    let results = cfg.exec.map(&starts, |v0| {
        let basis = tangent_basis(v0);
        let to_dir = |u: &[f64]| {
            let mut v = v0.clone();
            for (c, b) in u.iter().zip(&basis) {
                v.iter_mut().zip(b).for_each(|(a, e)| *a += c * e);
            }
            normalize(&mut v);
            v
        };
        let (u, _, evals) = nm.minimize(|u| side_min(mu, x, &to_dir(u)).0, &vec![0.0; n - 1], 0.5 * step);
        let v = to_dir(&u);
        let (m, side) = side_min(mu, x, &v);
        (m, side, v, evals + 1)
    });
    for (m, side, v, evals) in results {
        report.direction_count += evals;
        if m < report.depth {
            report.depth = m;
            report.side = side;
            report.direction = v;
        }
    }
    report.half_width = half_width(report.depth, report.mc_samples);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthVerification {
    pub s: f64,
    pub barycenter: Vec<f64>,
    pub bound: f64,
    pub margin: f64,
    pub passed: bool,
    pub report: DepthReport,
}

/// Depth at the barycenter against `(1/(1+s))^(1/s)` (`e^-1` at `s = 0`).
pub fn verify_depth_bound<M: Measure + ?Sized>(mu: &M, s: f64, tol: f64, cfg: &DepthConfig) -> Result<DepthVerification> {
    let class = ConcavityClass::s_concave(s, mu.dim())?;
    let bound = grunbaum_bound(&class);
    let barycenter = mu.barycenter();
    let report = tukey_depth(mu, &barycenter, cfg)?;
    let margin = report.depth - bound;
    Ok(DepthVerification {
        s,
        barycenter,
        bound,
        margin,
        passed: margin >= -tol,
        report,
    })
}
