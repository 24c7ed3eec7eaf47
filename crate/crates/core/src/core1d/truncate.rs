use super::density::{mass_tolerance, Density1D, Interval};
use crate::error::{Error, Result};
use crate::quadrature;

fn first_moment_between(d: &Density1D, lo: f64, hi: f64) -> f64 {
    let f = |x: f64| x * d.eval(x);
    let mut bps = d.breakpoints();
    bps.push(0.0);
    quadrature::integrate(&f, lo, hi, &bps, mass_tolerance())
}

/// Cuts an unbounded support at `k` and picks the other end `a_k` so that the
/// restricted, renormalized density has barycenter 0. A support unbounded
/// only below is handled by reflection (cut at `-k`). Bounded supports are
/// returned unchanged.
pub fn truncate_normalize(d: &Density1D, k: f64) -> Result<Density1D> {
    let s = d.support();
    if s.is_bounded() {
        return Ok(d.clone());
    }
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidParameter(format!("cut level must be positive, got {k}")));
    }
    if s.upper.is_finite() {
        return Ok(truncate_upper(&d.reflect(), k)?.reflect());
    }
    truncate_upper(d, k)
}

fn truncate_upper(d: &Density1D, k: f64) -> Result<Density1D> {
    let s = d.support();
    if k <= s.lower.max(0.0) {
        return Err(Error::NoAdmissibleTruncation(format!(
            "cut level {k} leaves no positive part of the support"
        )));
    }
    let g = |a: f64| first_moment_between(d, a, k);
    if g(0.0f64.max(s.lower)) <= 0.0 {
        return Err(Error::NoAdmissibleTruncation("no mass to the right of 0 below the cut".into()));
    }
    let mut lo = if s.lower.is_finite() {
        s.lower
    } else {
        let mut lo = -1.0;
        while g(lo) >= 0.0 && lo > -1e15 {
            lo *= 2.0;
        }
        lo
    };
    if g(lo) >= 0.0 {
        return Err(Error::NoAdmissibleTruncation(format!(
            "mass below {k} is insufficient to balance the barycenter"
        )));
    }
    lo = lo.max(s.lower);
    let a_k = quadrature::bisect(g, lo, 0.0, 1e-14 * (1.0 + lo.abs()));
    d.restrict(Interval::new(a_k, k)?)?.normalize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core1d::class::Orientation;
    use crate::core1d::density::{exp_density, neg_cone_density};
    use crate::core1d::moments::barycenter_1d;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exponential_truncation_is_centered() {
        let d = exp_density(1.0, Orientation::RightApex).unwrap();
        let t = truncate_normalize(&d, 10.0).unwrap();
        assert!(t.support().is_bounded());
        assert_abs_diff_eq!(t.mass(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(barycenter_1d(&t).unwrap(), 0.0, epsilon = 1e-10);
        let l = exp_density(1.0, Orientation::LeftApex).unwrap();
        let t = truncate_normalize(&l, 10.0).unwrap();
        assert_abs_diff_eq!(barycenter_1d(&t).unwrap(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn bounded_is_noop() {
        let d = Density1D::uniform(-1.0, 1.0).unwrap();
        assert_eq!(truncate_normalize(&d, 5.0).unwrap(), d);
    }

    #[test]
    fn negative_cone_truncations_converge() {
        let d = neg_cone_density(-3.0, 1.0, Orientation::LeftApex).unwrap();
        let mut last = 0.0;
        for k in [1e2, 1e3, 1e4] {
            let t = truncate_normalize(&d, k).unwrap();
            last = t.integrate(f64::NEG_INFINITY, 0.0);
        }
        assert_abs_diff_eq!(last, 8.0 / 27.0, epsilon = 1e-6);
    }
}
