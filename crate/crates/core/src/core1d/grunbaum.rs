use serde::{Deserialize, Serialize};

use super::check::{check_class, ClassReport, CLASS_TOL};
use super::class::{grunbaum_bound, ConcavityClass};
use super::density::Density1D;
use super::moments::barycenter_1d;
use super::profile::CdfProfile;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub class: ConcavityClass,
    pub barycenter: f64,
    /// Mass of `(-inf, 0]`.
    pub left_mass: f64,
    /// Mass of `[0, inf)`.
    pub right_mass: f64,
    pub bound: f64,
    pub left_margin: f64,
    pub right_margin: f64,
    pub passed: bool,
    /// Smaller side sits on the bound within tolerance.
    pub equality: bool,
    pub class_report: ClassReport,
}

impl VerificationReport {
    pub fn min_margin(&self) -> f64 {
        self.left_margin.min(self.right_margin)
    }
}

/// Both one-sided masses at the barycenter against the sharp bound.
///
/// Rejects (rather than extends) inputs outside the hypotheses: class
/// violation, barycenter off 0 by more than `tol`, 0 not interior to the
/// support, or all mass on one side.
pub fn verify_grunbaum_1d(d: &Density1D, cls: &ConcavityClass, tol: f64) -> Result<VerificationReport> {
    let one = cls.one_dim()?;
    let class_report = check_class(d, cls, CLASS_TOL);
    if !class_report.passed {
        return Err(Error::ClassViolation {
            violation: class_report.worst_violation,
            location: class_report.worst_location,
        });
    }
    let barycenter = barycenter_1d(d)?;
    if barycenter.abs() > tol {
        return Err(Error::NotCentered { barycenter, tol });
    }
    let s = d.support();
    if !s.contains_interior(0.0) {
        return Err(Error::OriginNotInterior {
            lower: s.lower,
            upper: s.upper,
        });
    }
    let mass = d.mass();
    let left_mass = d.integrate(s.lower, 0.0) / mass;
    let right_mass = d.integrate(0.0, s.upper) / mass;
    if left_mass <= 0.0 || right_mass <= 0.0 {
        return Err(Error::OriginNotInterior {
            lower: s.lower,
            upper: s.upper,
        });
    }
    let bound = grunbaum_bound(&one);
    let left_margin = left_mass - bound;
    let right_margin = right_mass - bound;
    Ok(VerificationReport {
        class: *cls,
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

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub class: ConcavityClass,
    pub c: f64,
    pub passed: bool,
    /// Largest `R - U` (positive means the envelope is crossed).
    pub max_violation: f64,
    pub violation_location: f64,
    /// Largest `|R - U|` over the points where `U` is finite.
    pub max_residual: f64,
    pub points_checked: usize,
}

/// Upper envelope `U(x)` of `R` built from `R(0)` and `c`; `None` where the
/// envelope is infinite.
pub fn envelope(one: &ConcavityClass, r0: f64, c: f64, x: f64) -> Option<f64> {
    match *one {
        ConcavityClass::PositiveN { n } => {
            let base = 1.0 + c * x / n;
            Some(if base <= 0.0 { 0.0 } else { r0 * base.powf(n) })
        }
        ConcavityClass::NegativeN { beta } => {
            let base = 1.0 + c * x / beta;
            (base > 0.0).then(|| r0 * base.powf(beta))
        }
        ConcavityClass::LogConcave => Some(r0 * (c * x).exp()),
        ConcavityClass::SConcave { .. } => None,
    }
}

/// Pointwise `R(x) <= U(x)` on the profile grid.
pub fn check_envelope(p: &CdfProfile, cls: &ConcavityClass, tol: f64) -> Result<EnvelopeReport> {
    let one = cls.one_dim()?;
    let c = p.c.ok_or_else(|| {
        let s = p.density().support();
        Error::OriginNotInterior {
            lower: s.lower,
            upper: s.upper,
        }
    })?;
    let mut max_violation = f64::NEG_INFINITY;
    let mut violation_location = f64::NAN;
    let mut max_residual = 0.0f64;
    let mut points = 0;
    for (&x, &r) in p.grid.iter().zip(&p.r) {
        let Some(u) = envelope(&one, p.r0, c, x) else {
            continue;
        };
        points += 1;
        let gap = r - u;
        if gap > max_violation {
            max_violation = gap;
            violation_location = x;
        }
        max_residual = max_residual.max(gap.abs());
    }
    Ok(EnvelopeReport {
        class: *cls,
        c,
        passed: max_violation <= tol,
        max_violation,
        violation_location,
        max_residual,
        points_checked: points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub integral: f64,
    pub upper: f64,
    pub residual: f64,
    pub passed: bool,
}

/// `∫_a^b R = b` for a centered density on a bounded interval.
pub fn int_r_identity(p: &CdfProfile, tol: f64) -> Result<IdentityCheck> {
    let s = p.density().support();
    if !s.is_bounded() {
        return Err(Error::Unsupported("identity needs a bounded support".into()));
    }
    if p.barycenter.abs() > tol {
        return Err(Error::NotCentered {
            barycenter: p.barycenter,
            tol,
        });
    }
    let integral = p.integrate_cdf(s.lower, s.upper);
    let residual = (integral - s.upper).abs();
    Ok(IdentityCheck {
        integral,
        upper: s.upper,
        residual,
        passed: residual <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core1d::class::Orientation;
    use crate::core1d::density::{cone_density, exp_density};
    use crate::core1d::profile::{cdf_profile, GridSpec};
    use approx::assert_abs_diff_eq;

    #[test]
    fn uniform_verifies_with_margin_one_eighteenth() {
        let d = Density1D::uniform(-1.0, 1.0).unwrap().normalize().unwrap();
        let r = verify_grunbaum_1d(&d, &ConcavityClass::PositiveN { n: 2.0 }, 1e-9).unwrap();
        assert!(r.passed && !r.equality);
        assert_abs_diff_eq!(r.left_margin, 1.0 / 18.0, epsilon = 1e-12);
    }

    #[test]
    fn extremal_models_reach_equality() {
        let d = cone_density(2.0, 1.0, Orientation::LeftApex).unwrap();
        let r = verify_grunbaum_1d(&d, &ConcavityClass::PositiveN { n: 2.0 }, 1e-9).unwrap();
        assert!(r.passed && r.equality);
        assert_abs_diff_eq!(r.left_mass, 4.0 / 9.0, epsilon = 1e-12);
        let d = exp_density(1.0, Orientation::LeftApex).unwrap();
        let r = verify_grunbaum_1d(&d, &ConcavityClass::LogConcave, 1e-9).unwrap();
        assert_abs_diff_eq!(r.left_mass, (-1.0f64).exp(), epsilon = 1e-10);
    }

    #[test]
    fn preconditions_enforced() {
        let m = Density1D::model(2.0).unwrap();
        assert!(matches!(
            verify_grunbaum_1d(&m, &ConcavityClass::PositiveN { n: 2.0 }, 1e-9),
            Err(Error::NotCentered { .. })
        ));
    }

    #[test]
    fn envelope_for_uniform_and_cone() {
        let d = Density1D::uniform(-1.0, 1.0).unwrap().normalize().unwrap();
        let p = cdf_profile(&d, &GridSpec::default()).unwrap();
        let e = check_envelope(&p, &ConcavityClass::PositiveN { n: 2.0 }, 1e-10).unwrap();
        assert!(e.passed);
        // U - R = x^2 / 8 on [-1, 1]
        assert_abs_diff_eq!(e.max_residual, 0.125, epsilon = 1e-12);
        let d = cone_density(2.0, 1.0, Orientation::LeftApex).unwrap();
        let p = cdf_profile(&d, &GridSpec::default()).unwrap();
        let e = check_envelope(&p, &ConcavityClass::PositiveN { n: 2.0 }, 1e-10).unwrap();
        assert!(e.passed && e.max_residual < 1e-12);
        let d = exp_density(1.0, Orientation::LeftApex).unwrap();
        let p = cdf_profile(&d, &GridSpec::default()).unwrap();
        let e = check_envelope(&p, &ConcavityClass::LogConcave, 1e-10).unwrap();
        assert!(e.passed && e.max_residual < 1e-10);
    }

    #[test]
    fn integral_of_cdf_equals_upper_end() {
        let d = Density1D::uniform(-1.0, 1.0).unwrap().normalize().unwrap();
        let p = cdf_profile(&d, &GridSpec::default()).unwrap();
        let r = int_r_identity(&p, 1e-10).unwrap();
        assert!(r.passed && r.residual < 1e-12);
        let d = cone_density(2.0, 1.0, Orientation::LeftApex).unwrap();
        let p = cdf_profile(&d, &GridSpec::default()).unwrap();
        assert!(int_r_identity(&p, 1e-10).unwrap().passed);
    }
}
