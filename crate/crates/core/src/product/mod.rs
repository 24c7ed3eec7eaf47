//! Split spaces `R x Y` whose Busemann coordinate is the first factor.
//!
//! `Y` is always a finite set of fibers with positive weights `n_y`, and a
//! density `rho(t, y)` is stored as one [`Density1D`] slice in `t` per fiber.
//! Everything verified here depends on `rho(t, .)` only through `sum_y n_y`,
//! so no fiber geometry is needed beyond the optional metric table.

pub mod fixtures;
pub mod needles;

use serde::{Deserialize, Serialize};

use crate::core1d::{
    check_class, grunbaum_bound, moments::moment, ClassReport, ConcavityClass, Density1D, Interval, CLASS_TOL,
};
use crate::error::{Error, Result};
use crate::nd::Side;

pub use needles::{
    needle_verify, needle_verify_with, rigidity_profile_check, separable_needles, CheckSummary, Needle,
    NeedleCheck, NeedleDecomposition, NeedleReport, NeedleRigidity, NeedleVerifyConfig, RigidityProfileReport,
};

/// Discretized fiber `(Y, n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberSpace {
    weights: Vec<f64>,
    metric: Option<Vec<Vec<f64>>>,
}

impl FiberSpace {
    pub fn new(weights: Vec<f64>, metric: Option<Vec<Vec<f64>>>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidParameter("fiber space needs at least one fiber".into()));
        }
        if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidParameter(format!("fiber weight {i} must be positive, got {w}")));
        }
        if let Some(d) = &metric {
            let m = weights.len();
            if d.len() != m || d.iter().any(|row| row.len() != m) {
                return Err(Error::InvalidParameter(format!("metric table must be {m} x {m}")));
            }
            let tol = 1e-12 * d.iter().flatten().fold(1.0f64, |a, &b| a.max(b.abs()));
            for i in 0..m {
                if d[i][i].abs() > tol {
                    return Err(Error::InvalidParameter(format!("metric has d({i},{i}) != 0")));
                }
                for j in 0..m {
                    if !(d[i][j] >= 0.0) || (d[i][j] - d[j][i]).abs() > tol {
                        return Err(Error::InvalidParameter(format!(
                            "metric is not symmetric and nonnegative at ({i},{j})"
                        )));
                    }
                    for k in 0..m {
                        if d[i][k] > d[i][j] + d[j][k] + tol {
                            return Err(Error::InvalidParameter(format!(
                                "metric violates the triangle inequality at ({i},{j},{k})"
                            )));
                        }
                    }
                }
            }
        }
        Ok(FiberSpace { weights, metric })
    }

    /// `count` fibers of weight `total / count`, no metric.
    pub fn uniform(count: usize, total: f64) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidParameter("fiber count must be positive".into()));
        }
        FiberSpace::new(vec![total / count as f64; count], None)
    }

    /// `count` equally spaced points on the unit circle with arc-length
    /// weights and the geodesic metric.
    pub fn circle(count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidParameter("fiber count must be positive".into()));
        }
        let tau = std::f64::consts::TAU;
        let step = tau / count as f64;
        let metric = (0..count)
            .map(|i| {
                (0..count)
                    .map(|j| {
                        let k = i.abs_diff(j).min(count - i.abs_diff(j));
                        k as f64 * step
                    })
                    .collect()
            })
            .collect();
        FiberSpace::new(vec![step; count], Some(metric))
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn metric(&self) -> Option<&[Vec<f64>]> {
        self.metric.as_deref()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// `rho(t, y)` on `R x Y`, normalized so that `sum_y n_y ∫ rho(t, y) dt = 1`.
/// Empty fibers carry no slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductDensity {
    fibers: FiberSpace,
    slices: Vec<Option<Density1D>>,
    class: ConcavityClass,
}

impl ProductDensity {
    pub fn new(fibers: FiberSpace, slices: Vec<Option<Density1D>>, class: ConcavityClass) -> Result<Self> {
        class.validate()?;
        if slices.len() != fibers.len() {
            return Err(Error::InvalidParameter(format!(
                "{} slices for {} fibers",
                slices.len(),
                fibers.len()
            )));
        }
        let total: f64 = fibers
            .weights()
            .iter()
            .zip(&slices)
            .filter_map(|(n, s)| s.as_ref().map(|d| n * d.mass()))
            .sum();
        if !(total > 0.0) {
            return Err(Error::ZeroMass);
        }
        let slices = slices
            .into_iter()
            .map(|s| s.map(|d| d.scaled(1.0 / total)).transpose())
            .collect::<Result<Vec<_>>>()?;
        Ok(ProductDensity { fibers, slices, class })
    }

    /// Tabulated values `values[i * fibers + y] = rho(t_i, y)`, piecewise
    /// linear in `t`.
    pub fn from_table(t_grid: Vec<f64>, fibers: FiberSpace, values: &[f64], class: ConcavityClass) -> Result<Self> {
        let (nt, ny) = (t_grid.len(), fibers.len());
        if values.len() != nt * ny {
            return Err(Error::InvalidParameter(format!(
                "expected {} values for a {nt} x {ny} table, got {}",
                nt * ny,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidDensity(format!("product density value {v} is not a finite nonnegative number")));
        }
        let slices = (0..ny)
            .map(|y| {
                let ys: Vec<f64> = (0..nt).map(|i| values[i * ny + y]).collect();
                if ys.iter().all(|&v| v == 0.0) {
                    Ok(None)
                } else {
                    Density1D::tabulated(t_grid.clone(), ys).map(Some)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        ProductDensity::new(fibers, slices, class)
    }

    /// `rho(t, y) = w(t) g(y)`.
    pub fn separable(w: &Density1D, g: &[f64], fibers: FiberSpace, class: ConcavityClass) -> Result<Self> {
        if g.len() != fibers.len() {
            return Err(Error::InvalidParameter(format!("{} fiber factors for {} fibers", g.len(), fibers.len())));
        }
        let slices = g
            .iter()
            .map(|&gy| {
                if gy < 0.0 || !gy.is_finite() {
                    Err(Error::InvalidParameter(format!("fiber factor must be nonnegative, got {gy}")))
                } else if gy == 0.0 {
                    Ok(None)
                } else {
                    w.scaled(gy).map(Some)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        ProductDensity::new(fibers, slices, class)
    }

    pub fn fibers(&self) -> &FiberSpace {
        &self.fibers
    }

    pub fn slices(&self) -> &[Option<Density1D>] {
        &self.slices
    }

    pub fn class(&self) -> ConcavityClass {
        self.class
    }

    /// `(n_y, rho(., y))` over the non-empty fibers, with fiber index.
    pub fn weighted_slices(&self) -> impl Iterator<Item = (usize, f64, &Density1D)> {
        self.fibers
            .weights()
            .iter()
            .zip(&self.slices)
            .enumerate()
            .filter_map(|(i, (n, s))| s.as_ref().map(|d| (i, *n, d)))
    }

    /// Hull of the slice supports.
    pub fn support(&self) -> Interval {
        let mut it = self.weighted_slices().map(|(_, _, d)| d.support());
        let first = it.next().expect("a product density has a non-empty fiber");
        it.fold(first, |a, b| a.hull(&b))
    }

    pub fn eval(&self, t: f64, y: usize) -> f64 {
        self.slices.get(y).and_then(|s| s.as_ref()).map_or(0.0, |d| d.eval(t))
    }

    /// `rho(t - tau, y)`.
    pub fn translate(&self, tau: f64) -> ProductDensity {
        ProductDensity {
            fibers: self.fibers.clone(),
            slices: self.slices.iter().map(|s| s.as_ref().map(|d| d.translate(tau))).collect(),
            class: self.class,
        }
    }

    /// Translate so that the Busemann barycenter sits at `t = 0`.
    pub fn recenter(&self) -> Result<ProductDensity> {
        Ok(self.translate(-barycenter_busemann(self)?))
    }
}

/// `w(t) = sum_y rho(t, y) n_y`.
pub fn pushforward_busemann(rho: &ProductDensity) -> Result<Density1D> {
    let parts = rho.weighted_slices().map(|(_, n, d)| (n, d.clone())).collect();
    Density1D::mixture(parts)
}

/// Mass of `{t <= r}` or `{t >= r}`, summed fiber by fiber.
pub fn busemann_mass(rho: &ProductDensity, r: f64, side: Side) -> f64 {
    let m: f64 = rho
        .weighted_slices()
        .map(|(_, n, d)| match side {
            Side::Le => n * d.integrate(f64::NEG_INFINITY, r),
            Side::Ge => n * d.integrate(r, f64::INFINITY),
        })
        .sum();
    m.clamp(0.0, 1.0)
}

/// `∫ t dmu`.
pub fn barycenter_busemann(rho: &ProductDensity) -> Result<f64> {
    let mut total = 0.0;
    for (_, n, d) in rho.weighted_slices() {
        total += n * moment(d, 1, 0.0, "first")?;
    }
    Ok(total)
}

/// Whether the Busemann barycenter lies where the density is positive.
/// Reported only; nothing is asserted about it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarycenterMembership {
    pub barycenter: f64,
    /// Fibers whose slice is positive at the barycenter.
    pub fibers_containing: usize,
    pub in_support: bool,
}

pub fn barycenter_membership(rho: &ProductDensity) -> Result<BarycenterMembership> {
    let b = barycenter_busemann(rho)?;
    let k = rho.weighted_slices().filter(|(_, _, d)| d.eval(b) > 0.0).count();
    Ok(BarycenterMembership {
        barycenter: b,
        fibers_containing: k,
        in_support: k > 0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PushforwardClassReport {
    pub class: ConcavityClass,
    /// Every fiber slice satisfies the class in `t`.
    pub input_passed: bool,
    /// First failing fiber, if any.
    pub input_violation: Option<(usize, ClassReport)>,
    pub pushforward: ClassReport,
    pub passed: bool,
}

/// Class of `w` under the class of `rho`; the slices are checked first so
/// that a bad input is reported as such rather than as a pushforward failure.
pub fn check_pushforward_class(rho: &ProductDensity, tol: f64) -> Result<PushforwardClassReport> {
    let cls = rho.class();
    let input_violation = rho
        .weighted_slices()
        .map(|(i, _, d)| (i, check_class(d, &cls, tol)))
        .find(|(_, r)| !r.passed);
    let w = pushforward_busemann(rho)?;
    let pushforward = check_class(&w, &cls, tol);
    let input_passed = input_violation.is_none();
    Ok(PushforwardClassReport {
        class: cls,
        input_passed,
        passed: input_passed && pushforward.passed,
        input_violation,
        pushforward,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductVerification {
    pub class: ConcavityClass,
    pub barycenter: BarycenterMembership,
    /// Mass of `{t <= 0}`.
    pub left_mass: f64,
    /// Mass of `{t >= 0}`.
    pub right_mass: f64,
    pub bound: f64,
    pub left_margin: f64,
    pub right_margin: f64,
    pub passed: bool,
    pub equality: bool,
    pub class_report: PushforwardClassReport,
}

/// Both horoball masses at the barycenter against the class bound.
pub fn verify_main_theorem(rho: &ProductDensity, tol: f64) -> Result<ProductVerification> {
    let cls = rho.class();
    let one = cls.one_dim()?;
    let class_report = check_pushforward_class(rho, CLASS_TOL)?;
    if !class_report.passed {
        let r = match &class_report.input_violation {
            Some((_, r)) => r,
            None => &class_report.pushforward,
        };
        return Err(Error::ClassViolation {
            violation: r.worst_violation,
            location: r.worst_location,
        });
    }
    let barycenter = barycenter_membership(rho)?;
    if barycenter.barycenter.abs() > tol {
        return Err(Error::NotCentered {
            barycenter: barycenter.barycenter,
            tol,
        });
    }
    let left_mass = busemann_mass(rho, 0.0, Side::Le);
    let right_mass = busemann_mass(rho, 0.0, Side::Ge);
    let bound = grunbaum_bound(&one);
    let left_margin = left_mass - bound;
    let right_margin = right_mass - bound;
    Ok(ProductVerification {
        class: cls,
        barycenter,
        left_mass,
        right_mass,
        bound,
        left_margin,
        right_margin,
        passed: left_margin >= -tol && right_margin >= -tol,
        equality: left_margin.min(right_margin).abs() <= tol,
        class_report,
    })
}

#[cfg(test)]
mod tests {
    use super::fixtures;
    use super::*;
    use crate::core1d::{cone_density, Orientation};
    use approx::assert_abs_diff_eq;

    #[test]
    fn fiber_space_validation() {
        assert!(FiberSpace::new(vec![1.0, 0.0], None).is_err());
        let bad = vec![vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]];
        assert!(FiberSpace::new(vec![1.0; 3], Some(bad)).is_err());
        let asym = vec![vec![0.0, 1.0], vec![2.0, 0.0]];
        assert!(FiberSpace::new(vec![1.0; 2], Some(asym)).is_err());
        let c = FiberSpace::circle(64).unwrap();
        assert_abs_diff_eq!(c.total_weight(), std::f64::consts::TAU, epsilon = 1e-12);
        assert_abs_diff_eq!(c.metric().unwrap()[0][32], std::f64::consts::PI, epsilon = 1e-12);
    }

    #[test]
    fn two_fiber_uniform_pushforward() {
        let u = Density1D::uniform(-1.0, 1.0).unwrap();
        let rho = ProductDensity::separable(
            &u,
            &[1.0, 1.0],
            FiberSpace::uniform(2, 2.0).unwrap(),
            ConcavityClass::PositiveN { n: 2.0 },
        )
        .unwrap();
        let w = pushforward_busemann(&rho).unwrap();
        assert_abs_diff_eq!(w.mass(), 1.0, epsilon = 1e-13);
        for t in [-0.9, 0.0, 0.7] {
            assert_abs_diff_eq!(w.eval(t), 0.5, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(busemann_mass(&rho, f64::INFINITY, Side::Le), 1.0, epsilon = 1e-13);
    }

    #[test]
    fn separable_recovers_profile() {
        let w = cone_density(2.0, 1.0, Orientation::LeftApex).unwrap();
        let rho = fixtures::separable_cone(2.0, 1.0, 8).unwrap();
        let p = pushforward_busemann(&rho).unwrap();
        for t in [-1.9, -1.0, 0.0, 0.5, 0.99] {
            assert_abs_diff_eq!(p.eval(t), w.eval(t), epsilon = 1e-14);
        }
        assert_abs_diff_eq!(busemann_mass(&rho, 0.0, Side::Le), 4.0 / 9.0, epsilon = 1e-12);
    }

    #[test]
    fn from_table_matches_separable() {
        let t = vec![-1.0, 0.0, 1.0];
        let values = vec![0.0, 0.0, 1.0, 3.0, 0.0, 0.0];
        let rho = ProductDensity::from_table(
            t,
            FiberSpace::uniform(2, 1.0).unwrap(),
            &values,
            ConcavityClass::PositiveN { n: 2.0 },
        )
        .unwrap();
        assert_abs_diff_eq!(busemann_mass(&rho, 0.0, Side::Le), 0.5, epsilon = 1e-13);
        assert_abs_diff_eq!(rho.eval(0.0, 1) / rho.eval(0.0, 0), 3.0, epsilon = 1e-13);
        assert!(ProductDensity::from_table(
            vec![0.0, 1.0],
            FiberSpace::uniform(2, 1.0).unwrap(),
            &[1.0, 1.0, 1.0],
            ConcavityClass::LogConcave
        )
        .is_err());
    }

    #[test]
    fn shifted_barycenter_and_recentering() {
        let rho = fixtures::separable_cone(2.0, 1.0, 4).unwrap();
        let shifted = rho.translate(0.3);
        assert_abs_diff_eq!(barycenter_busemann(&shifted).unwrap(), 0.3, epsilon = 1e-12);
        let back = shifted.recenter().unwrap();
        assert_abs_diff_eq!(barycenter_busemann(&back).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn fiberwise_violation_reported_first() {
        let dip = Density1D::tabulated(vec![-1.0, 0.0, 1.0], vec![1.0, 0.1, 1.0]).unwrap();
        let ok = Density1D::uniform(-1.0, 1.0).unwrap();
        let rho = ProductDensity::new(
            FiberSpace::uniform(2, 1.0).unwrap(),
            vec![Some(dip), Some(ok)],
            ConcavityClass::PositiveN { n: 2.0 },
        )
        .unwrap();
        let r = check_pushforward_class(&rho, CLASS_TOL).unwrap();
        assert!(!r.input_passed && !r.passed);
        assert_eq!(r.input_violation.unwrap().0, 0);
        assert!(matches!(verify_main_theorem(&rho, 1e-9), Err(Error::ClassViolation { .. })));
    }
}
