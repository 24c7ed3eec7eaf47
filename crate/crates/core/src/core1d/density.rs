use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::class::{power_bound, Orientation};
use crate::error::{Error, Result};
use crate::quadrature::{self, Tolerance};

/// Closed interval `[lower, upper]`; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() || !(lower < upper) {
            return Err(Error::InvalidDensity(format!(
                "empty support [{lower}, {upper}]"
            )));
        }
        if lower == f64::INFINITY || upper == f64::NEG_INFINITY {
            return Err(Error::InvalidDensity("support endpoint at the wrong infinity".into()));
        }
        Ok(Interval { lower, upper })
    }

    pub fn real_line() -> Self {
        Interval {
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.lower.is_finite() && self.upper.is_finite()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower && x <= self.upper
    }

    pub fn contains_interior(&self, x: f64) -> bool {
        x > self.lower && x < self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn intersect(&self, other: &Interval) -> Result<Interval> {
        Interval::new(self.lower.max(other.lower), self.upper.min(other.upper))
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lower: self.lower.min(other.lower),
            upper: self.upper.max(other.upper),
        }
    }

    fn mapped(&self, shift: f64, scale: f64) -> Interval {
        let a = shift + scale * self.lower;
        let b = shift + scale * self.upper;
        Interval {
            lower: a.min(b),
            upper: a.max(b),
        }
    }
}

/// How a piecewise-linear profile `phi` becomes a density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "exponent", rename_all = "snake_case")]
pub enum ProfileTransform {
    /// `w = phi^p` where `phi > 0`, zero elsewhere.
    Power(f64),
    /// `w = exp(phi)`.
    Exp,
}

/// Shape of a density in its own coordinate `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Uniform,
    /// `k (1 + c u / n)^(n - 1)` with `k = c (n/(n+1))^n`; `n > 1` or `n < -1`.
    Cone { n: f64, c: f64, k: f64 },
    /// `c exp(c u - 1)`.
    Exponential { c: f64 },
    /// `sum a_i u^i`.
    Polynomial { coeffs: Vec<f64> },
    /// `exp(sum a_i u^i)`.
    ExpPolynomial { coeffs: Vec<f64> },
    Gaussian { mean: f64, sd: f64 },
    /// `n u^(n-1)` on `[0, 1]`.
    Model { n: f64 },
    /// Piecewise-linear interpolation of `(xs, ys)`, zero outside.
    Tabulated { xs: Vec<f64>, ys: Vec<f64> },
    /// Piecewise-linear `phi` through `(xs, ys)`, extended linearly past the
    /// end knots, then transformed.
    PowerProfile {
        xs: Vec<f64>,
        ys: Vec<f64>,
        transform: ProfileTransform,
    },
    /// `sum weight_i w_i(u)`.
    Mixture { parts: Vec<(f64, Density1D)> },
}

fn interp(xs: &[f64], ys: &[f64], u: f64, extrapolate: bool) -> Option<f64> {
    let n = xs.len();
    if u < xs[0] || u > xs[n - 1] {
        if !extrapolate {
            return None;
        }
        let (i, j) = if u < xs[0] { (0, 1) } else { (n - 2, n - 1) };
        let slope = (ys[j] - ys[i]) / (xs[j] - xs[i]);
        return Some(ys[i] + slope * (u - xs[i]));
    }
    let j = xs.partition_point(|&x| x <= u).clamp(1, n - 1);
    let i = j - 1;
    let t = (u - xs[i]) / (xs[j] - xs[i]);
    Some(ys[i] + t * (ys[j] - ys[i]))
}

fn horner(coeffs: &[f64], u: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &a| acc * u + a)
}

impl Family {
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            Family::Uniform => 1.0,
            Family::Cone { n, c, k } => {
                let base = 1.0 + c * u / n;
                if base <= 0.0 {
                    0.0
                } else {
                    k * base.powf(n - 1.0)
                }
            }
            Family::Exponential { c } => c * (c * u - 1.0).exp(),
            Family::Polynomial { coeffs } => horner(coeffs, u),
            Family::ExpPolynomial { coeffs } => horner(coeffs, u).exp(),
            Family::Gaussian { mean, sd } => {
                let z = (u - mean) / sd;
                (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
            }
            Family::Model { n } => {
                if u < 0.0 {
                    0.0
                } else {
                    n * u.powf(n - 1.0)
                }
            }
            Family::Tabulated { xs, ys } => interp(xs, ys, u, false).unwrap_or(0.0),
            Family::PowerProfile { xs, ys, transform } => {
                let phi = interp(xs, ys, u, true).unwrap_or(0.0);
                match *transform {
                    ProfileTransform::Power(p) => {
                        if phi > 0.0 {
                            phi.powf(p)
                        } else {
                            0.0
                        }
                    }
                    ProfileTransform::Exp => phi.exp(),
                }
            }
            Family::Mixture { parts } => parts.iter().map(|(a, d)| a * d.eval(u)).sum(),
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            Family::Cone { n, c, .. } if *n > 0.0 => vec![-n / c],
            Family::Model { .. } => vec![0.0],
            Family::Tabulated { xs, .. } | Family::PowerProfile { xs, .. } => xs.clone(),
            Family::Mixture { parts } => {
                let mut v = Vec::new();
                for (_, d) in parts {
                    v.extend(d.breakpoints());
                    v.push(d.support.lower);
                    v.push(d.support.upper);
                }
                v.retain(|x| x.is_finite());
                v
            }
            _ => Vec::new(),
        }
    }

    /// Knots for which the class test is decided on knots (and segment
    /// midpoints) rather than a dense grid.
    fn knot_points(&self) -> Option<Vec<f64>> {
        match self {
            Family::Tabulated { xs, .. } | Family::PowerProfile { xs, .. } => Some(xs.clone()),
            Family::Mixture { parts } => {
                let mut v = Vec::new();
                for (_, d) in parts {
                    match &*d.family {
                        Family::Uniform | Family::Tabulated { .. } => {
                            v.extend(d.knots()?);
                        }
                        _ => return None,
                    }
                }
                Some(v)
            }
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Uniform => "uniform",
            Family::Cone { n, .. } if *n < 0.0 => "neg_cone",
            Family::Cone { .. } => "cone",
            Family::Exponential { .. } => "exponential",
            Family::Polynomial { .. } => "polynomial",
            Family::ExpPolynomial { .. } => "exp_polynomial",
            Family::Gaussian { .. } => "gaussian",
            Family::Model { .. } => "model",
            Family::Tabulated { .. } => "tabulated",
            Family::PowerProfile { .. } => "power_profile",
            Family::Mixture { .. } => "mixture",
        }
    }
}

/// A one-dimensional density `w` on a support interval.
///
/// Stored as a shape in its own coordinate `u` plus an affine change of
/// variable `x = shift + scale * u` and a multiplicative factor, so that
/// translation, reflection, dilation and normalization never resample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Density1D {
    family: Arc<Family>,
    support: Interval,
    shift: f64,
    scale: f64,
    factor: f64,
    mass: f64,
}

pub(crate) fn mass_tolerance() -> Tolerance {
    Tolerance::tight()
}

impl Density1D {
    /// Builds a density from a shape and its support, computing the mass.
    pub fn new(family: Family, support: Interval) -> Result<Self> {
        let mut d = Density1D {
            family: Arc::new(family),
            support,
            shift: 0.0,
            scale: 1.0,
            factor: 1.0,
            mass: f64::NAN,
        };
        d.validate_values()?;
        d.mass = d.integrate_raw(d.support.lower, d.support.upper);
        if !d.mass.is_finite() {
            return Err(Error::InvalidDensity("non-finite mass".into()));
        }
        if d.mass <= 0.0 {
            return Err(Error::ZeroMass);
        }
        Ok(d)
    }

    fn validate_values(&self) -> Result<()> {
        if let Family::Tabulated { xs, ys } | Family::PowerProfile { xs, ys, .. } = &*self.family {
            if xs.len() < 2 || xs.len() != ys.len() {
                return Err(Error::InvalidDensity(
                    "tabulation needs at least two knots and matching value count".into(),
                ));
            }
            if xs.windows(2).any(|p| !(p[0] < p[1])) || xs.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidDensity("knots must be finite and strictly increasing".into()));
            }
            if ys.iter().any(|y| !y.is_finite()) {
                return Err(Error::InvalidDensity("non-finite tabulated value".into()));
            }
            if matches!(&*self.family, Family::Tabulated { .. }) && ys.iter().any(|&y| y < 0.0) {
                return Err(Error::InvalidDensity("negative tabulated value".into()));
            }
        }
        // probe the evaluator across the support
        let (lo, hi) = probe_range(&self.support);
        let probes = 257;
        for i in 0..=probes {
            let x = lo + (hi - lo) * i as f64 / probes as f64;
            if !self.support.contains(x) {
                continue;
            }
            let v = self.eval(x);
            if v.is_nan() || v == f64::INFINITY && self.support.contains_interior(x) {
                return Err(Error::InvalidDensity(format!("non-finite value at x = {x}")));
            }
            if v < 0.0 {
                return Err(Error::InvalidDensity(format!("negative value {v} at x = {x}")));
            }
        }
        Ok(())
    }

    /// `w(x)`, zero outside the support.
    pub fn eval(&self, x: f64) -> f64 {
        if !self.support.contains(x) {
            return 0.0;
        }
        self.factor * self.family.eval((x - self.shift) / self.scale)
    }

    pub fn support(&self) -> Interval {
        self.support
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.mass - 1.0).abs() <= tol
    }

    /// Kinks of `w` and finite support ends, in the `x` coordinate.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .family
            .breakpoints()
            .into_iter()
            .map(|u| self.shift + self.scale * u)
            .filter(|x| self.support.contains(*x))
            .collect();
        if self.support.lower.is_finite() {
            v.push(self.support.lower);
        }
        if self.support.upper.is_finite() {
            v.push(self.support.upper);
        }
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    /// Knots for knot-determined class checks, in the `x` coordinate.
    pub fn knots(&self) -> Option<Vec<f64>> {
        let raw = match &*self.family {
            Family::Uniform => {
                if !self.support.is_bounded() {
                    return None;
                }
                return Some(vec![self.support.lower, self.support.upper]);
            }
            f => f.knot_points()?,
        };
        let mut v: Vec<f64> = raw
            .into_iter()
            .map(|u| self.shift + self.scale * u)
            .filter(|x| self.support.contains(*x))
            .collect();
        if self.support.lower.is_finite() {
            v.push(self.support.lower);
        }
        if self.support.upper.is_finite() {
            v.push(self.support.upper);
        }
        v.sort_by(f64::total_cmp);
        v.dedup();
        Some(v)
    }

    fn integrate_raw(&self, lo: f64, hi: f64) -> f64 {
        let f = |x: f64| self.eval(x);
        quadrature::integrate(&f, lo, hi, &self.breakpoints(), mass_tolerance())
    }

    /// `∫_lo^hi w`, clipped to the support.
    pub fn integrate(&self, lo: f64, hi: f64) -> f64 {
        let lo = lo.max(self.support.lower);
        let hi = hi.min(self.support.upper);
        if !(lo < hi) {
            return 0.0;
        }
        let mut bps = self.breakpoints();
        bps.push(0.0);
        let f = |x: f64| self.eval(x);
        quadrature::integrate(&f, lo, hi, &bps, mass_tolerance())
    }

    /// Same density scaled to unit mass.
    pub fn normalize(&self) -> Result<Density1D> {
        if !(self.mass > 0.0) {
            return Err(Error::ZeroMass);
        }
        Ok(Density1D {
            factor: self.factor / self.mass,
            mass: 1.0,
            ..self.clone()
        })
    }

    /// `k w` for `k > 0`.
    pub fn scaled(&self, k: f64) -> Result<Density1D> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidParameter(format!("scale factor must be positive, got {k}")));
        }
        Ok(Density1D {
            factor: self.factor * k,
            mass: self.mass * k,
            ..self.clone()
        })
    }

    /// Density of `X + tau`.
    pub fn translate(&self, tau: f64) -> Density1D {
        Density1D {
            shift: self.shift + tau,
            support: self.support.mapped(tau, 1.0),
            ..self.clone()
        }
    }

    /// Density of `-X`.
    pub fn reflect(&self) -> Density1D {
        Density1D {
            shift: -self.shift,
            scale: -self.scale,
            support: self.support.mapped(0.0, -1.0),
            ..self.clone()
        }
    }

    /// Density of `t X` for `t > 0`.
    pub fn dilate(&self, t: f64) -> Result<Density1D> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!("dilation factor must be positive, got {t}")));
        }
        Ok(Density1D {
            shift: self.shift * t,
            scale: self.scale * t,
            factor: self.factor / t,
            support: self.support.mapped(0.0, t),
            ..self.clone()
        })
    }

    /// Restriction to `window ∩ support`, mass recomputed (not renormalized).
    pub fn restrict(&self, window: Interval) -> Result<Density1D> {
        let support = self.support.intersect(&window)?;
        let mut d = Density1D {
            support,
            ..self.clone()
        };
        d.mass = d.integrate_raw(support.lower, support.upper);
        if !(d.mass > 0.0) {
            return Err(Error::ZeroMass);
        }
        Ok(d)
    }

    /// Uniform weight 1 on `[a, b]` (mass `b - a`).
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        let s = Interval::new(a, b)?;
        if !s.is_bounded() {
            return Err(Error::InvalidDensity("uniform density needs bounded support".into()));
        }
        Density1D::new(Family::Uniform, s)
    }

    pub fn polynomial(coeffs: Vec<f64>, support: Interval) -> Result<Self> {
        if !support.is_bounded() {
            return Err(Error::InvalidDensity("polynomial density needs bounded support".into()));
        }
        Density1D::new(Family::Polynomial { coeffs }, support)
    }

    pub fn exp_polynomial(coeffs: Vec<f64>, support: Interval) -> Result<Self> {
        Density1D::new(Family::ExpPolynomial { coeffs }, support)
    }

    pub fn gaussian(mean: f64, sd: f64, support: Interval) -> Result<Self> {
        if !(sd > 0.0) {
            return Err(Error::InvalidParameter(format!("standard deviation must be positive, got {sd}")));
        }
        Density1D::new(Family::Gaussian { mean, sd }, support)
    }

    /// `N x^(N-1)` on `[0, 1]`.
    pub fn model(n: f64) -> Result<Self> {
        if !(n > 1.0) {
            return Err(Error::InvalidParameter(format!("model needs N > 1, got {n}")));
        }
        Density1D::new(Family::Model { n }, Interval::new(0.0, 1.0)?)
    }

    /// Piecewise-linear density through `(xs, ys)`.
    pub fn tabulated(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() < 2 {
            return Err(Error::InvalidDensity("tabulation needs at least two knots".into()));
        }
        let s = Interval::new(xs[0], xs[xs.len() - 1])?;
        Density1D::new(Family::Tabulated { xs, ys }, s)
    }

    pub fn power_profile(
        xs: Vec<f64>,
        ys: Vec<f64>,
        transform: ProfileTransform,
        support: Interval,
    ) -> Result<Self> {
        Density1D::new(Family::PowerProfile { xs, ys, transform }, support)
    }

    /// `sum weight_i w_i`, support the hull of the parts.
    pub fn mixture(parts: Vec<(f64, Density1D)>) -> Result<Self> {
        let mut parts: Vec<(f64, Density1D)> = parts.into_iter().filter(|(a, _)| *a > 0.0).collect();
        if parts.is_empty() {
            return Err(Error::ZeroMass);
        }
        if parts.iter().any(|(a, _)| !a.is_finite()) {
            return Err(Error::InvalidDensity("non-finite mixture weight".into()));
        }
        parts.sort_by(|a, b| a.1.support.lower.total_cmp(&b.1.support.lower));
        let support = parts
            .iter()
            .skip(1)
            .fold(parts[0].1.support, |acc, (_, d)| acc.hull(&d.support));
        Density1D::new(Family::Mixture { parts }, support)
    }
}

fn probe_range(s: &Interval) -> (f64, f64) {
    match (s.lower.is_finite(), s.upper.is_finite()) {
        (true, true) => (s.lower, s.upper),
        (true, false) => (s.lower, s.lower + 64.0),
        (false, true) => (s.upper - 64.0, s.upper),
        (false, false) => (-32.0, 32.0),
    }
}

/// Extremal density `c (N/(N+1))^N (1 + c x / N)^(N-1)` on `[-N/c, 1/c]`
/// (left apex); the right-apex variant is its reflection.
pub fn cone_density(n: f64, c: f64, orientation: Orientation) -> Result<Density1D> {
    if !(n > 1.0 && n.is_finite()) {
        return Err(Error::InvalidParameter(format!("cone needs N > 1, got {n}")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("scale c must be positive, got {c}")));
    }
    let d = Density1D::new(
        Family::Cone {
            n,
            c,
            k: c * power_bound(n),
        },
        Interval::new(-n / c, 1.0 / c)?,
    )?;
    Ok(orient(d, orientation))
}

/// Heavy-tailed extremal density of the same form on `(-inf, 1/c]`, `N < -1`.
pub fn neg_cone_density(n: f64, c: f64, orientation: Orientation) -> Result<Density1D> {
    if !(n < -1.0 && n.is_finite()) {
        return Err(Error::InvalidParameter(format!("negative cone needs N < -1, got {n}")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("scale c must be positive, got {c}")));
    }
    let d = Density1D::new(
        Family::Cone {
            n,
            c,
            k: c * power_bound(n),
        },
        Interval::new(f64::NEG_INFINITY, 1.0 / c)?,
    )?;
    Ok(orient(d, orientation))
}

/// `c exp(c x - 1)` on `(-inf, 1/c]`.
pub fn exp_density(c: f64, orientation: Orientation) -> Result<Density1D> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("scale c must be positive, got {c}")));
    }
    let d = Density1D::new(
        Family::Exponential { c },
        Interval::new(f64::NEG_INFINITY, 1.0 / c)?,
    )?;
    Ok(orient(d, orientation))
}

fn orient(d: Density1D, orientation: Orientation) -> Density1D {
    match orientation {
        Orientation::LeftApex => d,
        Orientation::RightApex => d.reflect(),
    }
}

/// Whether the second moment of the negative cone is finite (`N < -2`).
pub fn neg_cone_has_second_moment(n: f64) -> bool {
    n < -2.0
}
