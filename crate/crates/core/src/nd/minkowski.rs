use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::GridDensityND;
use crate::core1d::{s_mean, ConcavityClass};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinkowskiReport {
    pub s: f64,
    pub trials: usize,
    pub lambdas: Vec<f64>,
    /// Smallest `mu((1-l)A + lB) - M_s(mu(A), mu(B); l)` seen.
    pub worst_margin: f64,
    pub worst_case: Option<MinkowskiCase>,
    pub passed: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinkowskiCase {
    pub a: (Vec<f64>, Vec<f64>),
    pub b: (Vec<f64>, Vec<f64>),
    pub lambda: f64,
    pub mass_a: f64,
    pub mass_b: f64,
    pub mass_combination: f64,
}

fn random_box<R: Rng>(rng: &mut R, lo: &[f64], hi: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut a = Vec::with_capacity(lo.len());
    let mut b = Vec::with_capacity(lo.len());
    for (&l, &h) in lo.iter().zip(hi) {
        let w = h - l;
        let side = rng.random_range(0.05..0.9) * w;
        let start = l + rng.random_range(0.0..(w - side));
        a.push(start);
        b.push(start + side);
    }
    (a, b)
}

/// Randomized check of `mu((1-l)A + lB) >= M_s(mu(A), mu(B); l)` over pairs of
/// axis-aligned boxes (whose combination is again a box), `n <= 2`.
pub fn minkowski_test(
    mu: &GridDensityND,
    s: f64,
    trials: usize,
    lambdas: &[f64],
    tol: f64,
    seed: u64,
) -> Result<MinkowskiReport> {
    if mu.dim() > 2 {
        return Err(Error::Unsupported("Minkowski test is limited to n <= 2".into()));
    }
    ConcavityClass::s_concave(s, mu.dim())?;
    if lambdas.iter().any(|&l| !(l > 0.0 && l < 1.0)) {
        return Err(Error::InvalidParameter("lambda values must lie in (0, 1)".into()));
    }
    let (lo, hi) = mu.bounds();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    let mut worst_case = None;
    for _ in 0..trials {
        let a = random_box(&mut rng, &lo, &hi);
        let b = random_box(&mut rng, &lo, &hi);
        let ma = mu.box_mass(&a.0, &a.1);
        let mb = mu.box_mass(&b.0, &b.1);
        for &l in lambdas {
            let c0: Vec<f64> = a.0.iter().zip(&b.0).map(|(x, y)| (1.0 - l) * x + l * y).collect();
            let c1: Vec<f64> = a.1.iter().zip(&b.1).map(|(x, y)| (1.0 - l) * x + l * y).collect();
            let mc = mu.box_mass(&c0, &c1);
            let margin = mc - s_mean(ma, mb, l, s);
            if margin < worst {
                worst = margin;
                worst_case = Some(MinkowskiCase {
                    a: a.clone(),
                    b: b.clone(),
                    lambda: l,
                    mass_a: ma,
                    mass_b: mb,
                    mass_combination: mc,
                });
            }
        }
    }
    Ok(MinkowskiReport {
        s,
        trials,
        lambdas: lambdas.to_vec(),
        worst_margin: worst,
        worst_case,
        passed: worst >= -tol,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lebesgue_square_is_half_concave() {
        let g = GridDensityND::uniform_box(&[0.0, 0.0], &[1.0, 1.0], 32).unwrap();
        let r = minkowski_test(&g, 0.5, 200, &[0.25, 0.5, 0.75], 1e-12, 1).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn identical_boxes_give_equality() {
        let g = GridDensityND::uniform_box(&[0.0, 0.0], &[1.0, 1.0], 8).unwrap();
        let m = g.box_mass(&[0.1, 0.2], &[0.6, 0.9]);
        assert!((s_mean(m, m, 0.3, 0.5) - m).abs() < 1e-15);
    }

    #[test]
    fn gaussian_grid_is_log_concave() {
        let axis: Vec<f64> = (0..=80).map(|i| -4.0 + 8.0 * i as f64 / 80.0).collect();
        let g = GridDensityND::from_fn(vec![axis.clone(), axis], |x| (-0.5 * (x[0] * x[0] + x[1] * x[1])).exp()).unwrap();
        let r = minkowski_test(&g, 0.0, 300, &[0.3, 0.5], 1e-9, 2).unwrap();
        assert!(r.passed, "{r:?}");
    }
}
