//! Reference product densities.

use super::{FiberSpace, ProductDensity};
use crate::core1d::{cone_density, exp_density, ConcavityClass, Density1D, Orientation};
use crate::error::{Error, Result};

/// Non-constant fiber factor used by the separable fixtures.
fn fiber_factor(count: usize) -> Vec<f64> {
    (0..count)
        .map(|y| 1.0 + 0.5 * (std::f64::consts::TAU * y as f64 / count as f64).sin())
        .collect()
}

/// Uniform measure on the cylinder `[-1, 1] x S^1` with `fibers` points on
/// the circle.
pub fn cylinder(fibers: usize) -> Result<ProductDensity> {
    let u = Density1D::uniform(-1.0, 1.0)?;
    ProductDensity::separable(
        &u,
        &vec![1.0; fibers],
        FiberSpace::circle(fibers)?,
        ConcavityClass::PositiveN { n: 2.0 },
    )
}

/// `cone(N, c)(t) g(y)` with the left-apex cone profile.
pub fn separable_cone(n: f64, c: f64, fibers: usize) -> Result<ProductDensity> {
    let w = cone_density(n, c, Orientation::LeftApex)?;
    ProductDensity::separable(
        &w,
        &fiber_factor(fibers),
        FiberSpace::uniform(fibers, 1.0)?,
        ConcavityClass::PositiveN { n },
    )
}

/// `c e^{ct - 1} g(y)` on `(-inf, 1/c]`.
pub fn separable_exponential(c: f64, fibers: usize) -> Result<ProductDensity> {
    let w = exp_density(c, Orientation::LeftApex)?;
    ProductDensity::separable(
        &w,
        &fiber_factor(fibers),
        FiberSpace::uniform(fibers, 1.0)?,
        ConcavityClass::LogConcave,
    )
}

/// Uniform on `[-1, 1] x Y` with equal fiber weights.
pub fn separable_uniform(fibers: usize) -> Result<ProductDensity> {
    let u = Density1D::uniform(-1.0, 1.0)?;
    ProductDensity::separable(
        &u,
        &vec![1.0; fibers],
        FiberSpace::uniform(fibers, 1.0)?,
        ConcavityClass::PositiveN { n: 2.0 },
    )
}

/// Uniform measure on the triangle with vertices `(0,0)`, `(1,0)`, `(apex,1)`,
/// with `t` the first coordinate and `y` cut into `cells` horizontal strips.
///
/// Each slice is the strip average of the indicator, a trapezoid in `t`, so
/// the pushforward is exactly the hat `2 Y(t)`.
pub fn triangle_product(cells: usize, apex: f64) -> Result<ProductDensity> {
    if cells == 0 {
        return Err(Error::InvalidParameter("cell count must be positive".into()));
    }
    if !(apex > 0.0 && apex < 1.0) {
        return Err(Error::InvalidParameter(format!("apex abscissa must lie in (0, 1), got {apex}")));
    }
    let h = 1.0 / cells as f64;
    let slices = (0..cells)
        .map(|j| {
            let (y0, y1) = (j as f64 * h, (j + 1) as f64 * h);
            let (a, b) = (apex * y0, apex * y1);
            let (c, d) = (1.0 - (1.0 - apex) * y1, 1.0 - (1.0 - apex) * y0);
            let (xs, ys) = if c - b > 1e-14 {
                (vec![a, b, c, d], vec![0.0, 1.0, 1.0, 0.0])
            } else {
                (vec![a, b, d], vec![0.0, 1.0, 0.0])
            };
            Density1D::tabulated(xs, ys).map(Some)
        })
        .collect::<Result<Vec<_>>>()?;
    ProductDensity::new(
        FiberSpace::uniform(cells, 1.0)?,
        slices,
        ConcavityClass::PositiveN { n: 2.0 },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core1d::{check_class, CLASS_TOL};
    use crate::nd::Side;
    use crate::product::{
        barycenter_busemann, busemann_mass, check_pushforward_class, pushforward_busemann, verify_main_theorem,
    };
    use approx::assert_abs_diff_eq;

    #[test]
    fn cylinder_is_balanced() {
        let rho = cylinder(64).unwrap();
        assert_abs_diff_eq!(barycenter_busemann(&rho).unwrap(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(busemann_mass(&rho, 0.0, Side::Le), 0.5, epsilon = 1e-13);
        let r = verify_main_theorem(&rho, 1e-10).unwrap();
        assert!(r.passed && !r.equality);
        assert!(r.barycenter.in_support);
    }

    #[test]
    fn triangle_pushforward_is_the_hat() {
        let apex = 0.3;
        let rho = triangle_product(40, apex).unwrap();
        let w = pushforward_busemann(&rho).unwrap();
        let hat = |t: f64| {
            if t <= apex {
                2.0 * t / apex
            } else {
                2.0 * (1.0 - t) / (1.0 - apex)
            }
        };
        for i in 1..50 {
            let t = i as f64 / 50.0;
            assert_abs_diff_eq!(w.eval(t), hat(t), epsilon = 1e-12);
        }
        let r = check_pushforward_class(&rho, CLASS_TOL).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(check_class(&w, &ConcavityClass::PositiveN { n: 2.0 }, CLASS_TOL).passed);
        assert_abs_diff_eq!(barycenter_busemann(&rho).unwrap(), (1.0 + apex) / 3.0, epsilon = 1e-12);
        let v = verify_main_theorem(&rho.recenter().unwrap(), 1e-9).unwrap();
        assert!(v.passed);
    }

    #[test]
    fn separable_models_reach_equality() {
        let r = verify_main_theorem(&separable_cone(2.0, 1.0, 16).unwrap(), 1e-9).unwrap();
        assert!(r.equality);
        assert_abs_diff_eq!(r.left_mass, 4.0 / 9.0, epsilon = 1e-10);
        let r = verify_main_theorem(&separable_exponential(1.0, 16).unwrap(), 1e-9).unwrap();
        assert!(r.equality);
        assert_abs_diff_eq!(r.left_mass, (-1.0f64).exp(), epsilon = 1e-10);
    }
}
