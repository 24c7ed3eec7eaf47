//! Seeded generators of class-valid densities.
//!
//! Each density is a power (or exponential) of a random piecewise-linear
//! profile: a minimum of affine functions for the concave classes, a maximum
//! for the convex one. Interpolating a concave (convex) function at its knots
//! keeps it concave (convex), so every draw satisfies its class exactly on
//! the knots. Draws are normalized and recentered.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::class::ConcavityClass;
use super::density::{Density1D, Interval, ProfileTransform};
use super::moments::recenter;
use crate::error::{Error, Result};
use crate::exec::Exec;

fn sorted_knots<R: Rng + ?Sized>(rng: &mut R, len: f64) -> Vec<f64> {
    let k = rng.random_range(1..=6);
    let mut xs: Vec<f64> = (0..k).map(|_| rng.random_range(0.02..0.98) * len).collect();
    xs.push(0.0);
    xs.push(len);
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() < 1e-6 * len);
    xs
}

struct Lines(Vec<(f64, f64)>);

impl Lines {
    fn min(&self, x: f64) -> f64 {
        self.0.iter().map(|(a, b)| a + b * x).fold(f64::INFINITY, f64::min)
    }
    fn max(&self, x: f64) -> f64 {
        self.0.iter().map(|(a, b)| a + b * x).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Extends the knot list until the last segment slope has the wanted sign.
fn extend_until<F: Fn(f64) -> f64>(xs: &mut Vec<f64>, phi: F, want_negative: bool) {
    let mut step = 1.0;
    for _ in 0..60 {
        let n = xs.len();
        let slope = (phi(xs[n - 1]) - phi(xs[n - 2])) / (xs[n - 1] - xs[n - 2]);
        if (want_negative && slope < -1e-3) || (!want_negative && slope > 1e-3) {
            return;
        }
        let last = xs[n - 1];
        xs.push(last + step);
        step *= 2.0;
    }
}

fn positive_profile<R: Rng + ?Sized>(n: f64, rng: &mut R) -> Result<Density1D> {
    let len = rng.random_range(0.5..3.0);
    if rng.random_bool(0.2) {
        // interpolation between the cone profile and the uniform one
        let theta: f64 = rng.random_range(0.0..1.0);
        let xs = vec![0.0, len];
        let ys = vec![theta, 1.0];
        return Density1D::power_profile(xs, ys, ProfileTransform::Power(n - 1.0), Interval::new(0.0, len)?);
    }
    let lines = Lines(
        (0..rng.random_range(1..=4))
            .map(|_| (rng.random_range(0.0..2.0), rng.random_range(-3.0..3.0)))
            .collect(),
    );
    let xs = sorted_knots(rng, len);
    let mut ys: Vec<f64> = xs.iter().map(|&x| lines.min(x)).collect();
    let end_min = ys[0].min(ys[ys.len() - 1]);
    let lift = if rng.random_bool(0.3) {
        -end_min
    } else {
        (-end_min).max(0.0) + rng.random_range(0.0..0.5)
    };
    ys.iter_mut().for_each(|y| *y += lift);
    if ys.iter().all(|&y| y <= 1e-9) {
        ys.iter_mut().for_each(|y| *y += 1.0);
    }
    Density1D::power_profile(xs, ys, ProfileTransform::Power(n - 1.0), Interval::new(0.0, len)?)
}

fn log_concave_profile<R: Rng + ?Sized>(rng: &mut R) -> Result<Density1D> {
    let len = rng.random_range(0.5..3.0);
    let mut lines: Vec<(f64, f64)> = (0..rng.random_range(1..=4))
        .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-4.0..4.0)))
        .collect();
    let unbounded = rng.random_bool(0.4);
    if unbounded {
        lines.push((rng.random_range(0.0..3.0), -rng.random_range(0.5..3.0)));
    }
    let lines = Lines(lines);
    let mut xs = sorted_knots(rng, len);
    let support = if unbounded {
        extend_until(&mut xs, |x| lines.min(x), true);
        Interval::new(0.0, f64::INFINITY)?
    } else {
        Interval::new(0.0, len)?
    };
    let ys: Vec<f64> = xs.iter().map(|&x| lines.min(x)).collect();
    Density1D::power_profile(xs, ys, ProfileTransform::Exp, support)
}

fn negative_profile<R: Rng + ?Sized>(beta: f64, rng: &mut R) -> Result<Density1D> {
    let len = rng.random_range(0.5..3.0);
    let mut lines: Vec<(f64, f64)> = (0..rng.random_range(1..=4))
        .map(|_| (rng.random_range(0.2..2.0), rng.random_range(-3.0..3.0)))
        .collect();
    let unbounded = rng.random_bool(0.4);
    if unbounded {
        lines.push((rng.random_range(0.2..2.0), rng.random_range(0.5..3.0)));
    }
    let lines = Lines(lines);
    let mut xs = sorted_knots(rng, len);
    let support = if unbounded {
        extend_until(&mut xs, |x| lines.max(x), false);
        Interval::new(0.0, f64::INFINITY)?
    } else {
        Interval::new(0.0, len)?
    };
    let mut ys: Vec<f64> = xs.iter().map(|&x| lines.max(x)).collect();
    let floor = rng.random_range(0.1..1.0);
    let low = ys.iter().copied().fold(f64::INFINITY, f64::min);
    ys.iter_mut().for_each(|y| *y += floor - low.min(floor));
    Density1D::power_profile(xs, ys, ProfileTransform::Power(beta - 1.0), support)
}

/// One normalized, centered density of the given one-dimensional class.
pub fn random_density<R: Rng + ?Sized>(class: &ConcavityClass, rng: &mut R) -> Result<Density1D> {
    let one = class.one_dim()?;
    let raw = match one {
        ConcavityClass::PositiveN { n } => positive_profile(n, rng)?,
        ConcavityClass::LogConcave => log_concave_profile(rng)?,
        ConcavityClass::NegativeN { beta } => negative_profile(beta, rng)?,
        ConcavityClass::SConcave { .. } => return Err(Error::Unsupported("unreachable class".into())),
    };
    let raw = if rng.random_bool(0.5) { raw.reflect() } else { raw };
    let scale = rng.random_range(0.5..2.0);
    recenter(&raw.dilate(scale)?.normalize()?)
}

/// `count` densities from independent streams of one seed.
pub fn random_suite(class: &ConcavityClass, count: usize, seed: u64, exec: Exec) -> Result<Vec<Density1D>> {
    exec.map_range(count, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        random_density(class, &mut rng)
    })
    .into_iter()
    .collect()
}
