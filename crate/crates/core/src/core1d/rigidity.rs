use serde::{Deserialize, Serialize};

use super::class::{grunbaum_bound, power_bound, ConcavityClass, Orientation};
use super::density::{cone_density, exp_density, neg_cone_density, Density1D, Interval};
use super::profile::CdfProfile;
use crate::error::{Error, Result};

/// An extremal model: class, scale `c` and apex side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub class: ConcavityClass,
    pub c: f64,
    pub orientation: Orientation,
}

impl ModelParams {
    pub fn new(class: &ConcavityClass, c: f64, orientation: Orientation) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!("model scale must be positive, got {c}")));
        }
        Ok(ModelParams {
            class: class.one_dim()?,
            c,
            orientation,
        })
    }

    pub fn support(&self) -> Interval {
        let c = self.c;
        let left = match self.class {
            ConcavityClass::PositiveN { n } => Interval {
                lower: -n / c,
                upper: 1.0 / c,
            },
            _ => Interval {
                lower: f64::NEG_INFINITY,
                upper: 1.0 / c,
            },
        };
        match self.orientation {
            Orientation::LeftApex => left,
            Orientation::RightApex => Interval {
                lower: -left.upper,
                upper: -left.lower,
            },
        }
    }

    fn left_cdf(&self, x: f64) -> f64 {
        let c = self.c;
        if x >= 1.0 / c {
            return 1.0;
        }
        match self.class {
            ConcavityClass::PositiveN { n } => {
                let base = 1.0 + c * x / n;
                if base <= 0.0 {
                    0.0
                } else {
                    power_bound(n) * base.powf(n)
                }
            }
            ConcavityClass::NegativeN { beta } => power_bound(beta) * (1.0 + c * x / beta).powf(beta),
            _ => (c * x - 1.0).exp(),
        }
    }

    /// Extremal CDF `F`.
    pub fn cdf(&self, x: f64) -> f64 {
        match self.orientation {
            Orientation::LeftApex => self.left_cdf(x),
            Orientation::RightApex => 1.0 - self.left_cdf(-x),
        }
    }

    /// Extremal density.
    pub fn density(&self) -> Result<Density1D> {
        match self.class {
            ConcavityClass::PositiveN { n } => cone_density(n, self.c, self.orientation),
            ConcavityClass::NegativeN { beta } => neg_cone_density(beta, self.c, self.orientation),
            _ => exp_density(self.c, self.orientation),
        }
    }

    /// Finite breakpoints of `F`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let s = self.support();
        [s.lower, s.upper].into_iter().filter(|x| x.is_finite()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidityReport {
    pub params: ModelParams,
    pub bound: f64,
    /// `|mass of the apex side - bound|`.
    pub mass_gap: f64,
    /// `sup |R - F|` over the profile grid.
    pub distance: f64,
    pub extremal: bool,
}

/// Fits the extremal model through `(R(0), w(0))` on whichever side is
/// closer to the bound and measures the sup distance of the CDFs.
pub fn rigidity_detect(p: &CdfProfile, cls: &ConcavityClass, tol: f64) -> Result<RigidityReport> {
    let one = cls.one_dim()?;
    if p.c.is_none() {
        let s = p.density().support();
        return Err(Error::OriginNotInterior {
            lower: s.lower,
            upper: s.upper,
        });
    }
    let bound = grunbaum_bound(&one);
    let left_gap = (p.r0 - bound).abs();
    let right_gap = (1.0 - p.r0 - bound).abs();
    let (orientation, c, mass_gap) = if left_gap <= right_gap {
        (Orientation::LeftApex, p.w0 / p.r0, left_gap)
    } else {
        (Orientation::RightApex, p.w0 / (1.0 - p.r0), right_gap)
    };
    let params = ModelParams::new(&one, c, orientation)?;
    let distance = p
        .grid
        .iter()
        .zip(&p.r)
        .map(|(&x, &r)| (r - params.cdf(x)).abs())
        .fold(0.0f64, f64::max);
    Ok(RigidityReport {
        params,
        bound,
        mass_gap,
        distance,
        extremal: distance <= tol && mass_gap <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core1d::profile::{cdf_profile, GridSpec};
    use approx::assert_abs_diff_eq;

    #[test]
    fn model_cdf_closed_forms() {
        let m = ModelParams::new(&ConcavityClass::PositiveN { n: 2.0 }, 1.0, Orientation::LeftApex).unwrap();
        assert_abs_diff_eq!(m.cdf(0.0), 4.0 / 9.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.cdf(-1.0), 1.0 / 9.0, epsilon = 1e-15);
        assert_eq!(m.cdf(-2.5), 0.0);
        let e = ModelParams::new(&ConcavityClass::LogConcave, 1.0, Orientation::LeftApex).unwrap();
        assert_abs_diff_eq!(e.cdf(-1.0), (-2.0f64).exp(), epsilon = 1e-15);
        for cls in [
            ConcavityClass::PositiveN { n: 3.0 },
            ConcavityClass::LogConcave,
            ConcavityClass::NegativeN { beta: -3.0 },
        ] {
            let m = ModelParams::new(&cls, 2.0, Orientation::LeftApex).unwrap();
            assert_abs_diff_eq!(m.cdf(0.5), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn detects_cone_and_exponential() {
        let d = cone_density(2.0, 3.0, Orientation::LeftApex).unwrap();
        let p = cdf_profile(&d, &GridSpec::default()).unwrap();
        let r = rigidity_detect(&p, &ConcavityClass::PositiveN { n: 2.0 }, 1e-9).unwrap();
        assert!(r.extremal);
        assert_abs_diff_eq!(r.params.c, 3.0, epsilon = 1e-9);
        let d = exp_density(2.0, Orientation::LeftApex).unwrap();
        let p = cdf_profile(&d, &GridSpec::default()).unwrap();
        let r = rigidity_detect(&p, &ConcavityClass::LogConcave, 1e-9).unwrap();
        assert!(r.extremal);
        assert_abs_diff_eq!(r.params.c, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn mirrored_cone_detected_on_right() {
        let d = cone_density(3.0, 1.5, Orientation::RightApex).unwrap();
        let p = cdf_profile(&d, &GridSpec::default()).unwrap();
        let r = rigidity_detect(&p, &ConcavityClass::PositiveN { n: 3.0 }, 1e-9).unwrap();
        assert!(r.extremal);
        assert_eq!(r.params.orientation, Orientation::RightApex);
        assert_abs_diff_eq!(r.params.c, 1.5, epsilon = 1e-9);
    }

    #[test]
    fn uniform_is_not_extremal() {
        let d = Density1D::uniform(-1.0, 1.0).unwrap().normalize().unwrap();
        let p = cdf_profile(&d, &GridSpec::default()).unwrap();
        let r = rigidity_detect(&p, &ConcavityClass::PositiveN { n: 2.0 }, 1e-9).unwrap();
        assert!(!r.extremal && r.distance > 1e-3);
    }
}
