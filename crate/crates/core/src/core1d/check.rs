use serde::{Deserialize, Serialize};

use super::class::ConcavityClass;
use super::density::Density1D;
use super::profile::{sample_grid, GridSpec};

/// Default tolerance on the relative three-point violation.
pub const CLASS_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub class: ConcavityClass,
    pub passed: bool,
    pub worst_violation: f64,
    pub worst_location: f64,
    pub points_checked: usize,
    /// Whether the verdict was decided on knots (and segment midpoints).
    pub knot_rule: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Concave,
    Convex,
}

/// Transformed profile `g(w)` and the shape `g` must have for `cls`.
pub fn class_transform(cls: &ConcavityClass) -> (Box<dyn Fn(f64) -> f64 + Send + Sync>, Shape) {
    match *cls {
        ConcavityClass::PositiveN { n } => (Box::new(move |w: f64| w.powf(1.0 / (n - 1.0))), Shape::Concave),
        ConcavityClass::NegativeN { beta } => {
            (Box::new(move |w: f64| w.powf(1.0 / (beta - 1.0))), Shape::Convex)
        }
        ConcavityClass::LogConcave => (Box::new(|w: f64| w.ln()), Shape::Concave),
        ConcavityClass::SConcave { .. } => {
            let one = cls.one_dim().expect("validated class");
            class_transform(&one)
        }
    }
}

/// Worst relative three-point violation of `shape` over `(xs, gs)`, testing
/// every triple `(i - k, i, i + k)` for strides `k = 1, 2, 4, ...`.
pub fn three_point_violation(xs: &[f64], gs: &[f64], shape: Shape) -> (f64, f64) {
    let n = xs.len();
    let global = gs.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let mut worst = 0.0f64;
    let mut at = f64::NAN;
    let mut k = 1;
    while 2 * k < n {
        for i in k..n - k {
            let (xl, xm, xr) = (xs[i - k], xs[i], xs[i + k]);
            let (gl, gm, gr) = (gs[i - k], gs[i], gs[i + k]);
            let lam = (xr - xm) / (xr - xl);
            let chord = lam * gl + (1.0 - lam) * gr;
            let gap = match shape {
                Shape::Concave => chord - gm,
                Shape::Convex => gm - chord,
            };
            let scale = gl.abs().max(gm.abs()).max(gr.abs()).max(1e-6 * global).max(1e-300);
            let v = gap / scale;
            if v > worst {
                worst = v;
                at = xm;
            }
        }
        k *= 2;
    }
    (worst, at)
}

/// Points at which the class of `d` is tested: knots plus segment midpoints
/// for piecewise families, the default grid otherwise.
pub fn class_points(d: &Density1D) -> (Vec<f64>, bool) {
    match d.knots() {
        Some(knots) => {
            let mut pts = Vec::with_capacity(2 * knots.len());
            for w in knots.windows(2) {
                pts.push(w[0]);
                pts.push(0.5 * (w[0] + w[1]));
            }
            pts.push(*knots.last().expect("non-empty knots"));
            (pts, true)
        }
        None => (sample_grid(d, &GridSpec::default()), false),
    }
}

/// Grid test of the one-dimensional class condition on `{w > 0}`.
pub fn check_class(d: &Density1D, cls: &ConcavityClass, tol: f64) -> ClassReport {
    let one = match cls.one_dim() {
        Ok(c) => c,
        Err(e) => {
            return ClassReport {
                class: *cls,
                passed: false,
                worst_violation: f64::INFINITY,
                worst_location: f64::NAN,
                points_checked: 0,
                knot_rule: false,
                note: Some(e.to_string()),
            }
        }
    };
    if let ConcavityClass::PositiveN { .. } = one {
        if !d.support().is_bounded() {
            return ClassReport {
                class: *cls,
                passed: false,
                worst_violation: f64::INFINITY,
                worst_location: if d.support().lower.is_finite() {
                    f64::INFINITY
                } else {
                    f64::NEG_INFINITY
                },
                points_checked: 0,
                knot_rule: false,
                note: Some("positive-N densities must have bounded support".into()),
            };
        }
    }
    let (pts, knot_rule) = class_points(d);
    let (g, shape) = class_transform(&one);
    let mut xs = Vec::with_capacity(pts.len());
    let mut gs = Vec::with_capacity(pts.len());
    for x in pts {
        let w = d.eval(x);
        // subnormal values carry too few bits for log / power transforms
        if w >= f64::MIN_POSITIVE && w.is_finite() {
            xs.push(x);
            gs.push(g(w));
        }
    }
    let (worst, at) = three_point_violation(&xs, &gs, shape);
    ClassReport {
        class: *cls,
        passed: worst <= tol,
        worst_violation: worst,
        worst_location: at,
        points_checked: xs.len(),
        knot_rule,
        note: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core1d::class::Orientation;
    use crate::core1d::density::{cone_density, exp_density, neg_cone_density, Interval};

    #[test]
    fn uniform_passes_everything() {
        let d = Density1D::uniform(-1.0, 1.0).unwrap().normalize().unwrap();
        for cls in [
            ConcavityClass::PositiveN { n: 2.0 },
            ConcavityClass::LogConcave,
            ConcavityClass::NegativeN { beta: -3.0 },
        ] {
            let r = check_class(&d, &cls, CLASS_TOL);
            assert!(r.passed, "{cls:?}: {r:?}");
        }
    }

    #[test]
    fn extremal_models_pass_their_class() {
        let d = cone_density(2.0, 1.0, Orientation::LeftApex).unwrap();
        let r = check_class(&d, &ConcavityClass::PositiveN { n: 2.0 }, CLASS_TOL);
        assert!(r.passed && r.worst_violation < 1e-12, "{r:?}");
        let d = exp_density(1.0, Orientation::LeftApex).unwrap();
        assert!(check_class(&d, &ConcavityClass::LogConcave, CLASS_TOL).passed);
        let d = neg_cone_density(-3.0, 1.0, Orientation::RightApex).unwrap();
        assert!(check_class(&d, &ConcavityClass::NegativeN { beta: -3.0 }, CLASS_TOL).passed);
    }

    #[test]
    fn log_convex_density_fails() {
        let d = Density1D::exp_polynomial(vec![0.0, 0.0, 1.0], Interval::new(-1.0, 1.0).unwrap())
            .unwrap()
            .normalize()
            .unwrap();
        let r = check_class(&d, &ConcavityClass::LogConcave, CLASS_TOL);
        assert!(!r.passed);
    }

    #[test]
    fn tabulated_uses_knot_rule() {
        let d = Density1D::tabulated(vec![-1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]).unwrap();
        let r = check_class(&d, &ConcavityClass::PositiveN { n: 2.0 }, CLASS_TOL);
        assert!(r.knot_rule && r.passed);
        let dip = Density1D::tabulated(vec![-1.0, 0.0, 1.0], vec![1.0, 0.2, 1.0]).unwrap();
        assert!(!check_class(&dip, &ConcavityClass::PositiveN { n: 2.0 }, CLASS_TOL).passed);
    }

    #[test]
    fn unbounded_support_rejected_for_positive_n() {
        let d = exp_density(1.0, Orientation::LeftApex).unwrap();
        let r = check_class(&d, &ConcavityClass::PositiveN { n: 3.0 }, CLASS_TOL);
        assert!(!r.passed && r.note.is_some());
    }
}
