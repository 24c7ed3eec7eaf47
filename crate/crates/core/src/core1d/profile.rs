use serde::{Deserialize, Serialize};

use super::density::{mass_tolerance, Density1D};
use super::moments::{barycenter_1d, second_moment};
use crate::error::{Error, Result};
use crate::quadrature::{self, Tolerance, DEFAULT_LEVEL};

/// Layout of the abscissae on which a CDF is tabulated.
///
/// A bounded support gets `points` uniform abscissae. An unbounded end gets a
/// uniform core out to the `core_tail` quantile and geometrically spaced
/// points beyond it until the remaining tail mass drops below `tail_mass`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub points: usize,
    pub core_tail: f64,
    pub tail_mass: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            points: 2048,
            core_tail: 1e-3,
            tail_mass: 1e-12,
        }
    }
}

impl GridSpec {
    pub fn with_points(points: usize) -> Self {
        GridSpec {
            points,
            ..GridSpec::default()
        }
    }
}

fn lower_tail_mass(d: &Density1D, x: f64) -> f64 {
    let f = |y: f64| d.eval(y);
    quadrature::lower_tail(&f, x, Tolerance::default(), DEFAULT_LEVEL)
}

fn upper_tail_mass(d: &Density1D, x: f64) -> f64 {
    let f = |y: f64| d.eval(y);
    quadrature::upper_tail(&f, x, Tolerance::default(), DEFAULT_LEVEL)
}

/// Distances `2^k` from `anchor` at which the tail mass first drops below the
/// two thresholds.
fn tail_reach(tail: impl Fn(f64) -> f64, core: f64, far: f64) -> (f64, f64) {
    let mut core_dist = None;
    let mut k = -12;
    loop {
        let dist = 2f64.powi(k);
        let m = tail(dist);
        if core_dist.is_none() && m <= core {
            core_dist = Some(dist);
        }
        if m <= far || k >= 60 {
            let c = core_dist.unwrap_or(dist);
            return (c, dist.max(2.0 * c));
        }
        k += 1;
    }
}

/// Abscissae for tabulating `d`: see [`GridSpec`]. Breakpoints and, when it is
/// inside the support, the origin are always included.
pub fn sample_grid(d: &Density1D, spec: &GridSpec) -> Vec<f64> {
    let s = d.support();
    let bps = d.breakpoints();
    let finite_lo = bps.first().copied();
    let finite_hi = bps.last().copied();
    let mass = d.mass();
    let n = spec.points.max(16);

    let (core_lo, far_lo) = if s.lower.is_finite() {
        (s.lower, s.lower)
    } else {
        let anchor = finite_lo.unwrap_or(0.0);
        let (c, f) = tail_reach(
            |dist| lower_tail_mass(d, anchor - dist),
            spec.core_tail * mass,
            spec.tail_mass * mass,
        );
        (anchor - c, anchor - f)
    };
    let (core_hi, far_hi) = if s.upper.is_finite() {
        (s.upper, s.upper)
    } else {
        let anchor = finite_hi.unwrap_or(0.0).max(core_lo);
        let (c, f) = tail_reach(
            |dist| upper_tail_mass(d, anchor + dist),
            spec.core_tail * mass,
            spec.tail_mass * mass,
        );
        (anchor + c, anchor + f)
    };

    let tails = usize::from(!s.lower.is_finite()) + usize::from(!s.upper.is_finite());
    let n_tail = n / 8;
    let n_core = n - tails * n_tail;
    let mut grid: Vec<f64> = (0..n_core)
        .map(|i| core_lo + (core_hi - core_lo) * i as f64 / (n_core - 1) as f64)
        .collect();
    let h = (core_hi - core_lo) / (n_core - 1) as f64;
    let geometric = |span: f64| -> Vec<f64> {
        if span <= h {
            return Vec::new();
        }
        let r = (span / h).powf(1.0 / n_tail as f64);
        (1..=n_tail).map(|j| h * r.powi(j as i32)).collect()
    };
    if !s.lower.is_finite() {
        grid.extend(geometric(core_lo - far_lo).into_iter().map(|t| core_lo - t));
    }
    if !s.upper.is_finite() {
        grid.extend(geometric(far_hi - core_hi).into_iter().map(|t| core_hi + t));
    }
    grid.extend(bps);
    if s.contains_interior(0.0) {
        grid.push(0.0);
    }
    grid.retain(|x| s.contains(*x));
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// Tabulated CDF `R` of a density together with the scalars that the
/// Grünbaum machinery reads off it.
#[derive(Debug, Clone, Serialize)]
pub struct CdfProfile {
    #[serde(skip)]
    density: Density1D,
    pub grid: Vec<f64>,
    pub r: Vec<f64>,
    pub barycenter: f64,
    /// `None` when the second moment diverges.
    pub second_moment: Option<f64>,
    pub w0: f64,
    pub r0: f64,
    /// `w(0)/R(0)`; `None` unless 0 is interior and `0 < R(0) < 1`.
    pub c: Option<f64>,
}

/// Tabulates `R` for a normalized density.
pub fn cdf_profile(d: &Density1D, spec: &GridSpec) -> Result<CdfProfile> {
    if !d.is_normalized(1e-8) {
        return Err(Error::InvalidDensity(format!(
            "profile needs a normalized density, mass is {}",
            d.mass()
        )));
    }
    let grid = sample_grid(d, spec);
    let s = d.support();
    let mass = d.mass();
    let f = |x: f64| d.eval(x);
    let mut r = Vec::with_capacity(grid.len());
    let mut acc = if s.lower.is_finite() {
        0.0
    } else {
        lower_tail_mass(d, grid[0])
    };
    r.push(acc / mass);
    for w in grid.windows(2) {
        acc += quadrature::simpson(&f, w[0], w[1], mass_tolerance());
        r.push((acc / mass).min(1.0));
    }
    // enforce monotonicity against rounding in nearly empty cells
    for i in 1..r.len() {
        if r[i] < r[i - 1] {
            r[i] = r[i - 1];
        }
    }
    let barycenter = barycenter_1d(d)?;
    let second_moment = match second_moment(d) {
        Ok(v) => Some(v),
        Err(Error::DivergentMoment { .. }) => None,
        Err(e) => return Err(e),
    };
    let mut p = CdfProfile {
        density: d.clone(),
        grid,
        r,
        barycenter,
        second_moment,
        w0: d.eval(0.0),
        r0: 0.0,
        c: None,
    };
    p.r0 = p.cdf(0.0);
    if s.contains_interior(0.0) && p.r0 > 0.0 && p.r0 < 1.0 && p.w0 > 0.0 {
        p.c = Some(p.w0 / p.r0);
    }
    Ok(p)
}

impl CdfProfile {
    pub fn density(&self) -> &Density1D {
        &self.density
    }

    /// `R(x)` at an arbitrary abscissa.
    pub fn cdf(&self, x: f64) -> f64 {
        let s = self.density.support();
        if x <= s.lower {
            return 0.0;
        }
        if x >= s.upper {
            return 1.0;
        }
        let mass = self.density.mass();
        let f = |y: f64| self.density.eval(y);
        let n = self.grid.len();
        if x < self.grid[0] {
            return lower_tail_mass(&self.density, x) / mass;
        }
        if x > self.grid[n - 1] {
            return (1.0 - upper_tail_mass(&self.density, x) / mass).max(self.r[n - 1]);
        }
        let j = self.grid.partition_point(|&g| g <= x);
        if j >= 1 && self.grid[j - 1] == x {
            return self.r[j - 1];
        }
        let i = j - 1;
        let (a, b) = (self.grid[i], self.grid[j]);
        let v = if x - a <= b - x {
            self.r[i] + quadrature::simpson(&f, a, x, mass_tolerance()) / mass
        } else {
            self.r[j] - quadrature::simpson(&f, x, b, mass_tolerance()) / mass
        };
        v.clamp(self.r[i], self.r[j])
    }

    /// `∫_lo^hi R` over a bounded range.
    pub fn integrate_cdf(&self, lo: f64, hi: f64) -> f64 {
        let f = |x: f64| self.cdf(x);
        quadrature::integrate(&f, lo, hi, &self.grid, Tolerance::with_abs(1e-13))
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core1d::class::Orientation;
    use crate::core1d::density::{cone_density, exp_density, neg_cone_density};
    use approx::assert_abs_diff_eq;

    #[test]
    fn uniform_profile() {
        let d = Density1D::uniform(-1.0, 1.0).unwrap().normalize().unwrap();
        let p = cdf_profile(&d, &GridSpec::default()).unwrap();
        assert_abs_diff_eq!(p.r0, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(p.c.unwrap(), 1.0, epsilon = 1e-13);
        for (&x, &r) in p.grid.iter().zip(&p.r) {
            assert_abs_diff_eq!(r, (x + 1.0) / 2.0, epsilon = 1e-13);
        }
        assert_abs_diff_eq!(p.cdf(0.123), 0.5615, epsilon = 1e-13);
    }

    #[test]
    fn cone_profile_matches_closed_form() {
        let d = cone_density(2.0, 1.0, Orientation::LeftApex).unwrap();
        let p = cdf_profile(&d, &GridSpec::default()).unwrap();
        assert_abs_diff_eq!(p.r0, 4.0 / 9.0, epsilon = 1e-13);
        for &x in &[-1.7f64, -0.4, 0.33, 0.99] {
            let exact = 4.0 / 9.0 * (1.0 + x / 2.0).powi(2);
            assert_abs_diff_eq!(p.cdf(x), exact, epsilon = 1e-13);
        }
        assert_abs_diff_eq!(*p.r.last().unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn exponential_profile() {
        let d = exp_density(1.0, Orientation::LeftApex).unwrap();
        let p = cdf_profile(&d, &GridSpec::default()).unwrap();
        assert_abs_diff_eq!(p.r0, (-1.0f64).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(p.cdf(-3.0), (-4.0f64).exp(), epsilon = 1e-12);
        assert!(p.r[0] < 1e-11);
        assert!(p.r.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn negative_cone_profile() {
        let d = neg_cone_density(-3.0, 1.0, Orientation::LeftApex).unwrap();
        let p = cdf_profile(&d, &GridSpec::default()).unwrap();
        assert_abs_diff_eq!(p.r0, 8.0 / 27.0, epsilon = 1e-10);
        assert!(p.second_moment.is_some());
        let d = neg_cone_density(-1.5, 1.0, Orientation::LeftApex).unwrap();
        let p = cdf_profile(&d, &GridSpec::default()).unwrap();
        assert!(p.second_moment.is_none());
    }

    #[test]
    fn origin_on_boundary_leaves_c_undefined() {
        let d = Density1D::uniform(0.0, 1.0).unwrap();
        let p = cdf_profile(&d, &GridSpec::default()).unwrap();
        assert!(p.c.is_none());
    }
}
