//! Quantitative stability: how far a nearly extremal CDF is from the model.
//!
//! `ε` is always measured from `R(0)`, so a certificate needs nothing beyond
//! the density itself. Only [`needle_stability`] takes a user `ε`, since its
//! hypothesis concerns the global measure.

use serde::{Deserialize, Serialize};

use crate::core1d::{
    barycenter_1d, cdf_profile, check_class, grunbaum_bound, power_bound, CdfProfile, ConcavityClass, Density1D,
    GridSpec, ModelParams, Orientation, CLASS_TOL,
};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::product::NeedleDecomposition;
use crate::quadrature::{self, Tolerance, DEFAULT_LEVEL};

/// Largest `|∫ x w|` accepted as centered.
pub const CENTER_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub class: ConcavityClass,
    pub second_moment: f64,
    /// `1 / w(0)^2`.
    pub inv_w0_sq: f64,
    /// `2(N+1)(N+2)/N^2 ∫x^2 w`; absent for the log-concave class.
    pub lower: Option<f64>,
    /// `12 ∫x^2 w`.
    pub upper: f64,
    /// Relative margins, positive when the inequality holds strictly.
    pub lower_margin: Option<f64>,
    pub upper_margin: f64,
    pub passed: bool,
}

/// Two-sided bound on `w(0)` by the second moment of a centered density.
pub fn moment_sandwich(p: &CdfProfile, cls: &ConcavityClass, tol: f64) -> Result<SandwichReport> {
    let one = cls.one_dim()?;
    let n = match one {
        ConcavityClass::PositiveN { n } => Some(n),
        ConcavityClass::LogConcave => None,
        _ => {
            return Err(Error::Unsupported(
                "no moment sandwich is known for negative N".into(),
            ))
        }
    };
    if p.barycenter.abs() > CENTER_TOL {
        return Err(Error::NotCentered {
            barycenter: p.barycenter,
            tol: CENTER_TOL,
        });
    }
    let m2 = p.second_moment.ok_or(Error::DivergentMoment {
        moment: "second",
        relative_gap: f64::INFINITY,
    })?;
    if !(p.w0 > 0.0) {
        return Err(Error::InvalidDensity("w(0) must be positive".into()));
    }
    let inv_w0_sq = 1.0 / (p.w0 * p.w0);
    let upper = 12.0 * m2;
    let lower = n.map(|n| 2.0 * (n + 1.0) * (n + 2.0) / (n * n) * m2);
    let upper_margin = (upper - inv_w0_sq) / inv_w0_sq;
    let lower_margin = lower.map(|l| (inv_w0_sq - l) / inv_w0_sq);
    Ok(SandwichReport {
        class: *cls,
        second_moment: m2,
        inv_w0_sq,
        lower,
        upper,
        passed: upper_margin >= -tol && lower_margin.is_none_or(|m| m >= -tol),
        lower_margin,
        upper_margin,
    })
}

/// Left-apex extremal CDF `F` of the class with scale `c`.
pub fn model_cdf(cls: &ConcavityClass, c: f64) -> Result<ModelParams> {
    ModelParams::new(cls, c, Orientation::LeftApex)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct L1Distance {
    /// `∫ |R - F|` over the window where either CDF is tabulated.
    pub value: f64,
    /// Upper bound on the part of the integral outside that window.
    pub truncation_error: f64,
}

/// `∫_R |R - F|`.
pub fn l1_cdf_distance(p: &CdfProfile, model: &ModelParams) -> L1Distance {
    let d = p.density();
    let s = d.support();
    let ms = model.support();
    let g0 = p.grid[0];
    let g1 = p.grid[p.grid.len() - 1];
    let lo = if ms.lower.is_finite() { g0.min(ms.lower) } else { g0 };
    let hi = if ms.upper.is_finite() { g1.max(ms.upper) } else { g1 };
    let mut cuts = p.grid.clone();
    cuts.extend(model.breakpoints());
    let f = |x: f64| (p.cdf(x) - model.cdf(x)).abs();
    let value = quadrature::integrate(&f, lo, hi, &cuts, Tolerance::with_abs(1e-13));

    let tail_tol = Tolerance::with_abs(1e-15);
    let mass = d.mass();
    let left_bound = |x: f64| {
        let r = if s.lower < x {
            let g = |y: f64| (x - y) * d.eval(y);
            quadrature::lower_tail(&g, x, tail_tol, DEFAULT_LEVEL) / mass
        } else {
            0.0
        };
        r + if ms.lower < x { model_left_tail_integral(model, x) } else { 0.0 }
    };
    let right_bound = |x: f64| {
        if s.upper > x {
            let g = |y: f64| (y - x) * d.eval(y);
            quadrature::upper_tail(&g, x, tail_tol, DEFAULT_LEVEL) / mass
        } else {
            0.0
        }
    };
    let (left_value, left_error) = tail_extension(&f, lo, -1.0, &left_bound);
    let (right_value, right_error) = tail_extension(&f, hi, 1.0, &right_bound);
    L1Distance {
        value: value + left_value + right_value,
        truncation_error: left_error + right_error,
    }
}

/// Integrates `f` outward from `x` in direction `dir` until the tail bound
/// beyond the reached point drops below `TAIL_TARGET`. Returns the integral and
/// the remaining bound.
fn tail_extension<F: Fn(f64) -> f64, B: Fn(f64) -> f64>(f: &F, x: f64, dir: f64, bound: &B) -> (f64, f64) {
    const TAIL_TARGET: f64 = 1e-13;
    let mut rest = bound(x);
    let mut total = 0.0;
    let mut near = x;
    let mut step = x.abs().max(1.0);
    for _ in 0..64 {
        if rest <= TAIL_TARGET {
            break;
        }
        let far = near + dir * step;
        let (a, b) = if dir < 0.0 { (far, near) } else { (near, far) };
        total += quadrature::integrate(f, a, b, &[], Tolerance::with_abs(1e-15));
        rest = bound(far);
        near = far;
        step *= 2.0;
    }
    (total, rest)
}

/// `∫_{-inf}^x F` for a left-apex model with unbounded lower end.
fn model_left_tail_integral(model: &ModelParams, x: f64) -> f64 {
    let c = model.c;
    match model.class {
        ConcavityClass::NegativeN { beta } => {
            let u = 1.0 + c * x / beta;
            power_bound(beta) * (beta / c) * u.powf(beta + 1.0) / (beta + 1.0)
        }
        ConcavityClass::LogConcave => model.cdf(x) / c,
        _ => 0.0,
    }
}

/// Statistic entering the right-hand side of a stability bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Statistic {
    /// `∫ x^2 w` of the centered density.
    SecondMoment(f64),
    /// `w(0)`.
    DensityAtZero(f64),
}

/// Explicit bound on `∫|R - F|` for a density with `R(0) <= (1+ε) bound`.
///
/// Second-moment forms exist for the positive and log-concave classes. The
/// `w(0)` form exists for every class; for the log-concave class it is the
/// `N -> -inf` limit of the negative form.
pub fn stability_rhs(cls: &ConcavityClass, eps: f64, stat: Statistic) -> Result<f64> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("ε must be nonnegative, got {eps}")));
    }
    let one = cls.one_dim()?;
    let e = std::f64::consts::E;
    let sqrt3 = 3f64.sqrt();
    let value = match (one, stat) {
        (ConcavityClass::PositiveN { n }, Statistic::SecondMoment(m2)) => {
            check_stat(m2, "second moment")?;
            4.0 * sqrt3 * n * power_bound(n) * (1.0 + eps) * shrink(n, eps) * m2.sqrt()
        }
        (ConcavityClass::LogConcave, Statistic::SecondMoment(m2)) => {
            check_stat(m2, "second moment")?;
            4.0 * sqrt3 / e * (1.0 + eps) * eps.ln_1p() * m2.sqrt()
        }
        (ConcavityClass::PositiveN { n }, Statistic::DensityAtZero(w0))
        | (ConcavityClass::NegativeN { beta: n }, Statistic::DensityAtZero(w0)) => {
            check_stat(w0, "w(0)")?;
            2.0 * n / w0 * power_bound(n) * (1.0 + eps) * shrink(n, eps)
        }
        (ConcavityClass::LogConcave, Statistic::DensityAtZero(w0)) => {
            check_stat(w0, "w(0)")?;
            2.0 * (1.0 + eps) * eps.ln_1p() / (w0 * e)
        }
        (ConcavityClass::NegativeN { .. }, Statistic::SecondMoment(_)) => {
            return Err(Error::InvalidParameter(
                "negative classes take w(0), not the second moment".into(),
            ))
        }
        (ConcavityClass::SConcave { .. }, _) => unreachable!("one_dim never returns SConcave"),
    };
    Ok(value.max(0.0))
}

fn check_stat(v: f64, name: &str) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

/// `1 - (1+ε)^{-1/N}`, accurate for small `ε`.
fn shrink(n: f64, eps: f64) -> f64 {
    -(-eps.ln_1p() / n).exp_m1()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityCertificate {
    pub class: ConcavityClass,
    pub epsilon: f64,
    pub r0: f64,
    pub w0: f64,
    pub c: f64,
    pub model: ModelParams,
    pub model_id: String,
    pub lhs: f64,
    pub truncation_error: f64,
    pub rhs: f64,
    pub statistic: Statistic,
    pub second_moment: Option<f64>,
    pub tol: f64,
    pub passed: bool,
}

/// `ε`, `c`, `F`, `∫|R - F|` and the bound for one density.
pub fn stability_certificate(d: &Density1D, cls: &ConcavityClass, tol: f64) -> Result<StabilityCertificate> {
    let p = certified_profile(d, cls)?;
    certificate_from_profile(&p, cls, None, tol)
}

fn certified_profile(d: &Density1D, cls: &ConcavityClass) -> Result<CdfProfile> {
    let report = check_class(d, cls, CLASS_TOL);
    if !report.passed {
        return Err(Error::ClassViolation {
            violation: report.worst_violation,
            location: report.worst_location,
        });
    }
    let b = barycenter_1d(d)?;
    if b.abs() > CENTER_TOL {
        return Err(Error::NotCentered {
            barycenter: b,
            tol: CENTER_TOL,
        });
    }
    cdf_profile(d, &GridSpec::default())
}

/// Certificate with the bound evaluated at `eps_override` when given, at the
/// measured `ε` otherwise.
fn certificate_from_profile(
    p: &CdfProfile,
    cls: &ConcavityClass,
    eps_override: Option<f64>,
    tol: f64,
) -> Result<StabilityCertificate> {
    let one = cls.one_dim()?;
    let c = p.c.ok_or_else(|| {
        let s = p.density().support();
        Error::OriginNotInterior {
            lower: s.lower,
            upper: s.upper,
        }
    })?;
    let bound = grunbaum_bound(&one);
    let measured = (p.r0 / bound - 1.0).max(0.0);
    let epsilon = eps_override.unwrap_or(measured);
    let model = model_cdf(&one, c)?;
    let dist = l1_cdf_distance(p, &model);
    let statistic = match one {
        ConcavityClass::NegativeN { .. } => Statistic::DensityAtZero(p.w0),
        _ => Statistic::SecondMoment(p.second_moment.ok_or(Error::DivergentMoment {
            moment: "second",
            relative_gap: f64::INFINITY,
        })?),
    };
    let rhs = stability_rhs(&one, epsilon, statistic)?;
    Ok(StabilityCertificate {
        class: *cls,
        epsilon,
        r0: p.r0,
        w0: p.w0,
        c,
        model,
        model_id: format!("{}-left-apex(c={c})", one.label()),
        lhs: dist.value,
        truncation_error: dist.truncation_error,
        rhs,
        statistic,
        second_moment: p.second_moment,
        tol,
        passed: dist.value + dist.truncation_error <= rhs + tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeedleStability {
    pub index: usize,
    pub weight: f64,
    pub left_mass: f64,
    pub selected: bool,
    /// `ε` measured on the needle.
    pub needle_epsilon: Option<f64>,
    pub certificate: Option<StabilityCertificate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeedleStabilityReport {
    pub class: ConcavityClass,
    pub epsilon: f64,
    pub delta: f64,
    /// `ε + δ + εδ`.
    pub epsilon_prime: f64,
    pub bound: f64,
    pub global_left: f64,
    /// `(1+δ)(1+ε) bound`.
    pub threshold: f64,
    pub selected_mass: f64,
    /// `δ / (1+δ)`.
    pub required_mass: f64,
    pub needles: Vec<NeedleStability>,
    pub failing: Vec<usize>,
    pub passed: bool,
}

/// Selects the needles whose left mass is at most `(1+δ)(1+ε) bound` and
/// certifies each of them with `ε' = ε + δ + εδ`.
pub fn needle_stability(
    decomposition: &NeedleDecomposition,
    cls: &ConcavityClass,
    eps: f64,
    delta: f64,
    tol: f64,
) -> Result<NeedleStabilityReport> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("ε must be nonnegative, got {eps}")));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!("δ must be positive, got {delta}")));
    }
    let one = cls.one_dim()?;
    let bound = grunbaum_bound(&one);
    let needles = decomposition.needles();
    let lefts: Vec<f64> = Exec::default().map(needles, |n| n.density.integrate(f64::NEG_INFINITY, 0.0));
    let global_left: f64 = needles.iter().zip(&lefts).map(|(n, l)| n.weight * l).sum();
    if global_left > (1.0 + eps) * bound + tol {
        return Err(Error::HypothesisViolated(format!(
            "global left mass {global_left} exceeds (1+ε) bound = {}",
            (1.0 + eps) * bound
        )));
    }
    let epsilon_prime = eps + delta + eps * delta;
    let threshold = (1.0 + delta) * (1.0 + eps) * bound;
    let results: Vec<Result<NeedleStability>> = Exec::default().map_range(needles.len(), |i| {
        let n = &needles[i];
        let selected = lefts[i] <= threshold + tol;
        let (needle_epsilon, certificate) = if selected {
            let p = certified_profile(&n.density, cls)?;
            let cert = certificate_from_profile(&p, cls, Some(epsilon_prime), tol)?;
            ((p.r0 / bound - 1.0).max(0.0).into(), Some(cert))
        } else {
            (None, None)
        };
        Ok(NeedleStability {
            index: i,
            weight: n.weight,
            left_mass: lefts[i],
            selected,
            needle_epsilon,
            certificate,
        })
    });
    let needles = results.into_iter().collect::<Result<Vec<_>>>()?;
    let selected_mass: f64 = needles.iter().filter(|n| n.selected).map(|n| n.weight).sum();
    let required_mass = delta / (1.0 + delta);
    let failing: Vec<usize> = needles
        .iter()
        .filter(|n| n.certificate.as_ref().is_some_and(|c| !c.passed))
        .map(|n| n.index)
        .collect();
    Ok(NeedleStabilityReport {
        class: *cls,
        epsilon: eps,
        delta,
        epsilon_prime,
        bound,
        global_left,
        threshold,
        selected_mass,
        required_mass,
        passed: selected_mass >= required_mass - tol && failing.is_empty(),
        needles,
        failing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core1d::{cone_density, exp_density};
    use crate::product::{fixtures, separable_needles};
    use approx::assert_abs_diff_eq;

    fn uniform() -> Density1D {
        Density1D::uniform(-1.0, 1.0).unwrap().normalize().unwrap()
    }

    #[test]
    fn sandwich_examples() {
        let r3 = 3f64.sqrt();
        let d = Density1D::uniform(-r3, r3).unwrap().normalize().unwrap();
        let p = cdf_profile(&d, &GridSpec::default()).unwrap();
        let s = moment_sandwich(&p, &ConcavityClass::PositiveN { n: 2.0 }, 1e-9).unwrap();
        assert_abs_diff_eq!(s.inv_w0_sq, 12.0, epsilon = 1e-9);
        assert!(s.passed && s.upper_margin.abs() < 1e-9);
        let d = cone_density(2.0, 1.0, Orientation::LeftApex).unwrap();
        let p = cdf_profile(&d, &GridSpec::default()).unwrap();
        let s = moment_sandwich(&p, &ConcavityClass::PositiveN { n: 2.0 }, 1e-9).unwrap();
        assert_abs_diff_eq!(s.second_moment, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s.lower.unwrap(), 3.0, epsilon = 1e-11);
        assert_abs_diff_eq!(s.inv_w0_sq, 81.0 / 16.0, epsilon = 1e-11);
        assert!(s.passed);
        let p = cdf_profile(&neg_cone(), &GridSpec::default()).unwrap();
        assert!(matches!(
            moment_sandwich(&p, &ConcavityClass::NegativeN { beta: -5.0 }, 1e-9),
            Err(Error::Unsupported(_))
        ));
    }

    fn neg_cone() -> Density1D {
        crate::core1d::neg_cone_density(-5.0, 1.0, Orientation::LeftApex).unwrap()
    }

    #[test]
    fn gaussian_sandwich_right_side() {
        let d = Density1D::gaussian(0.0, 1.0, crate::core1d::Interval::real_line()).unwrap();
        let p = cdf_profile(&d, &GridSpec::default()).unwrap();
        let s = moment_sandwich(&p, &ConcavityClass::LogConcave, 1e-9).unwrap();
        assert_abs_diff_eq!(s.inv_w0_sq, std::f64::consts::TAU, epsilon = 1e-9);
        assert!(s.passed && s.lower.is_none());
    }

    #[test]
    fn uniform_distance_is_one_eighth() {
        let p = cdf_profile(&uniform(), &GridSpec::default()).unwrap();
        let m = model_cdf(&ConcavityClass::PositiveN { n: 2.0 }, 1.0).unwrap();
        let l = l1_cdf_distance(&p, &m);
        assert_abs_diff_eq!(l.value, 0.125, epsilon = 1e-10);
        assert_eq!(l.truncation_error, 0.0);
    }

    #[test]
    fn rhs_examples() {
        let v = stability_rhs(
            &ConcavityClass::PositiveN { n: 2.0 },
            0.125,
            Statistic::SecondMoment(1.0 / 3.0),
        )
        .unwrap();
        let exact = 4.0 * 3f64.sqrt() * (8.0 / 9.0) * (9.0 / 8.0) * (1.0 - (9.0f64 / 8.0).powf(-0.5)) / 3f64.sqrt();
        assert_abs_diff_eq!(v, exact, epsilon = 1e-14);
        assert!((v - 0.2289).abs() < 1e-3);
        let v = stability_rhs(&ConcavityClass::LogConcave, 0.1, Statistic::SecondMoment(1.0)).unwrap();
        assert!((v - 0.2673).abs() < 1e-3);
        assert!(stability_rhs(
            &ConcavityClass::NegativeN { beta: -3.0 },
            0.1,
            Statistic::SecondMoment(1.0)
        )
        .is_err());
    }

    #[test]
    fn uniform_certificate() {
        let c = stability_certificate(&uniform(), &ConcavityClass::PositiveN { n: 2.0 }, 1e-9).unwrap();
        assert_abs_diff_eq!(c.epsilon, 0.125, epsilon = 1e-12);
        assert_abs_diff_eq!(c.lhs, 0.125, epsilon = 1e-9);
        assert!((c.rhs - 0.2289).abs() < 1e-3);
        assert!(c.passed);
    }

    #[test]
    fn extremal_certificates_vanish() {
        let c = stability_certificate(
            &cone_density(2.0, 1.0, Orientation::LeftApex).unwrap(),
            &ConcavityClass::PositiveN { n: 2.0 },
            1e-9,
        )
        .unwrap();
        assert!(c.lhs < 1e-10 && c.rhs < 1e-10 && c.passed, "{c:?}");
        let c = stability_certificate(&exp_density(1.0, Orientation::LeftApex).unwrap(), &ConcavityClass::LogConcave, 1e-9)
            .unwrap();
        assert!(c.lhs + c.truncation_error < 1e-10 && c.rhs < 1e-10 && c.passed, "{c:?}");
        let c = stability_certificate(&neg_cone(), &ConcavityClass::NegativeN { beta: -5.0 }, 1e-9).unwrap();
        assert!(c.lhs + c.truncation_error < 1e-9 && c.passed, "{c:?}");
    }

    #[test]
    fn separable_uniform_needles() {
        let rho = fixtures::separable_uniform(8).unwrap();
        let d = separable_needles(&rho, 1e-10).unwrap();
        let r = needle_stability(&d, &ConcavityClass::PositiveN { n: 2.0 }, 0.125, 0.5, 1e-9).unwrap();
        assert!(r.passed, "{r:?}");
        assert_abs_diff_eq!(r.epsilon_prime, 0.6875, epsilon = 1e-15);
        assert_abs_diff_eq!(r.selected_mass, 1.0, epsilon = 1e-12);
        assert!(needle_stability(&d, &ConcavityClass::PositiveN { n: 2.0 }, 0.1, 0.5, 1e-9).is_err());
    }
}
