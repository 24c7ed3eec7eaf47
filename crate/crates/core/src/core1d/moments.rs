use super::density::{mass_tolerance, Density1D};
use crate::error::{Error, Result};
use crate::quadrature::{self, DEFAULT_LEVEL};

/// Relative disagreement allowed between the two truncation levels.
pub const DIVERGENCE_TOL: f64 = 1e-8;

fn moment_at_level(d: &Density1D, p: i32, about: f64, level: f64, absolute: bool) -> f64 {
    let s = d.support();
    let mut bps = d.breakpoints();
    bps.push(about);
    bps.push(0.0);
    let f = |x: f64| {
        let w = d.eval(x);
        if w == 0.0 {
            return 0.0;
        }
        let y = (x - about).powi(p);
        if absolute {
            y.abs() * w
        } else {
            y * w
        }
    };
    quadrature::integrate_at_level(&f, s.lower, s.upper, &bps, mass_tolerance(), level)
}

/// `∫ (x - about)^p w`. On an unbounded support the integral is taken with the
/// tail cut at distance `e^L` and at `e^L · 2`; disagreement beyond
/// [`DIVERGENCE_TOL`] relative to `∫ |x - about|^p w` flags divergence.
pub fn moment(d: &Density1D, p: i32, about: f64, name: &'static str) -> Result<f64> {
    let value = moment_at_level(d, p, about, DEFAULT_LEVEL, false);
    if d.support().is_bounded() {
        return Ok(value);
    }
    let level2 = DEFAULT_LEVEL + std::f64::consts::LN_2;
    let abs1 = moment_at_level(d, p, about, DEFAULT_LEVEL, true);
    let abs2 = moment_at_level(d, p, about, level2, true);
    let scale = abs2.abs().max(f64::MIN_POSITIVE);
    let gap = (abs2 - abs1).abs() / scale;
    if !abs2.is_finite() || gap > DIVERGENCE_TOL {
        return Err(Error::DivergentMoment {
            moment: name,
            relative_gap: gap,
        });
    }
    Ok(value)
}

/// `∫ x w / ∫ w`.
pub fn barycenter_1d(d: &Density1D) -> Result<f64> {
    Ok(moment(d, 1, 0.0, "first")? / d.mass())
}

/// `∫ x^2 w / ∫ w` (about the origin).
pub fn second_moment(d: &Density1D) -> Result<f64> {
    Ok(moment(d, 2, 0.0, "second")? / d.mass())
}

/// Translate so that the barycenter sits at 0.
pub fn recenter(d: &Density1D) -> Result<Density1D> {
    let b = barycenter_1d(d)?;
    Ok(d.translate(-b))
}
