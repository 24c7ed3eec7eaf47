//! Adaptive Simpson quadrature with half-infinite support handling.
//!
//! Finite ranges are split at caller-supplied breakpoints (kinks, support
//! ends) and at a few uniform panels, then refined adaptively. A half-infinite
//! tail `(-inf, x]` is integrated directly over `[x - 1, x]` and through the
//! substitution `s = x - e^u` beyond, block by block in `u`. Power tails become
//! exponential in `u`, so the block sums decay geometrically; integration stops
//! once the extrapolated remainder drops below `TAIL_REMAINDER` relative to
//! the running total, or at the truncation level `u = level`.

use serde::{Deserialize, Serialize};

/// Default truncation level in the substituted variable: the tail is cut at a
/// distance `e^level` from its anchor.
pub const DEFAULT_LEVEL: f64 = 100.0;

const TAIL_REMAINDER: f64 = 1e-14;
const INITIAL_PANELS: usize = 4;

/// Bisection depth limit. Deeper panels are narrower than `1e-9` of the
/// starting panel; below that, rounding noise in integrands with root-type
/// endpoint behavior keeps the error test from ever succeeding.
const MAX_DEPTH: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_depth: u32,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: 1e-10,
            rel: 0.0,
            max_depth: MAX_DEPTH,
        }
    }
}

impl Tolerance {
    /// Tight setting used for CDF tables, where relative accuracy in the
    /// tails matters.
    pub fn tight() -> Self {
        Tolerance {
            abs: 1e-15,
            rel: 1e-13,
            max_depth: MAX_DEPTH,
        }
    }

    pub fn with_abs(abs: f64) -> Self {
        Tolerance {
            abs,
            ..Tolerance::default()
        }
    }
}

fn simpson_rule(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    fa: f64,
    m: f64,
    fm: f64,
    b: f64,
    fb: f64,
    whole: f64,
    abs: f64,
    rel: f64,
    depth: u32,
) -> f64 {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson_rule(fa, flm, fm, m - a);
    let right = simpson_rule(fm, frm, fb, b - m);
    let both = left + right;
    let delta = both - whole;
    let target = abs.max(rel * both.abs());
    let width_floor = 4.0 * f64::EPSILON * (a.abs() + b.abs()).max(f64::MIN_POSITIVE);
    if depth == 0 || delta.abs() <= 15.0 * target || (b - a) <= width_floor || !delta.is_finite() {
        return both + delta / 15.0;
    }
    refine(f, a, fa, lm, flm, m, fm, left, 0.5 * abs, rel, depth - 1)
        + refine(f, m, fm, rm, frm, b, fb, right, 0.5 * abs, rel, depth - 1)
}

/// Adaptive Simpson on a finite interval.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: Tolerance) -> f64 {
    if b == a {
        return 0.0;
    }
    if b < a {
        return -simpson(f, b, a, tol);
    }
    let panels = INITIAL_PANELS;
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    let mut x0 = a;
    let mut f0 = f(a);
    for i in 0..panels {
        let x1 = if i + 1 == panels { b } else { a + h * (i + 1) as f64 };
        let m = 0.5 * (x0 + x1);
        let fm = f(m);
        let f1 = f(x1);
        let whole = simpson_rule(f0, fm, f1, x1 - x0);
        total += refine(
            f,
            x0,
            f0,
            m,
            fm,
            x1,
            f1,
            whole,
            tol.abs / panels as f64,
            tol.rel,
            tol.max_depth,
        );
        x0 = x1;
        f0 = f1;
    }
    total
}

/// `∫_{-∞}^{x} f`, truncated at distance `e^level` below `x`.
pub fn lower_tail<F: Fn(f64) -> f64>(f: &F, x: f64, tol: Tolerance, level: f64) -> f64 {
    let near = simpson(f, x - 1.0, x, tol);
    let g = |u: f64| {
        let e = u.exp();
        f(x - e) * e
    };
    near + substituted_blocks(&g, tol, level)
}

/// `∫_{x}^{∞} f`, truncated at distance `e^level` above `x`.
pub fn upper_tail<F: Fn(f64) -> f64>(f: &F, x: f64, tol: Tolerance, level: f64) -> f64 {
    let near = simpson(f, x, x + 1.0, tol);
    let g = |u: f64| {
        let e = u.exp();
        f(x + e) * e
    };
    near + substituted_blocks(&g, tol, level)
}

fn substituted_blocks<G: Fn(f64) -> f64>(g: &G, tol: Tolerance, level: f64) -> f64 {
    let mut total = 0.0;
    let mut prev: Option<f64> = None;
    let mut u = 0.0;
    let block_tol = Tolerance {
        abs: tol.abs * 0.25,
        ..tol
    };
    while u < level {
        let hi = (u + 1.0).min(level);
        let block = simpson(g, u, hi, block_tol);
        total += block;
        if let Some(p) = prev {
            let (b, p) = (block.abs(), p.abs());
            if b == 0.0 && p == 0.0 {
                break;
            }
            if b < p {
                let r = b / p;
                let remainder = b * r / (1.0 - r);
                if remainder <= TAIL_REMAINDER * total.abs().max(f64::MIN_POSITIVE)
                    || remainder <= tol.abs * 1e-3
                {
                    break;
                }
            }
        }
        prev = Some(block);
        u = hi;
    }
    total
}

/// `∫_a^b f` where either end may be infinite. `breakpoints` inside `(a, b)`
/// split the range so kinks never sit inside a Simpson panel.
pub fn integrate<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: Tolerance,
) -> f64 {
    integrate_at_level(f, a, b, breakpoints, tol, DEFAULT_LEVEL)
}

pub fn integrate_at_level<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: Tolerance,
    level: f64,
) -> f64 {
    if !(a < b) {
        return 0.0;
    }
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&x| x.is_finite() && x > a && x < b)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    if cuts.is_empty() && !(a.is_finite() && b.is_finite()) {
        let anchor = if b.is_finite() {
            b
        } else if a.is_finite() {
            a
        } else {
            0.0
        };
        if anchor > a && anchor < b {
            cuts.push(anchor);
        }
    }
    let mut total = 0.0;
    let mut lo = a;
    let pieces = cuts.iter().copied().chain(std::iter::once(b));
    for hi in pieces {
        total += if lo.is_finite() && hi.is_finite() {
            simpson(f, lo, hi, tol)
        } else if !lo.is_finite() && hi.is_finite() {
            lower_tail(f, hi, tol, level)
        } else if lo.is_finite() {
            upper_tail(f, lo, tol, level)
        } else {
            lower_tail(f, 0.0, tol, level) + upper_tail(f, 0.0, tol, level)
        };
        lo = hi;
    }
    total
}

/// Root of a monotone function on `[lo, hi]` by bisection. The caller
/// guarantees a sign change.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, xtol: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= xtol || mid == lo || mid == hi {
            return mid;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn polynomial_exact() {
        let v = simpson(&|x: f64| x * x * x - 2.0 * x + 1.0, -1.0, 2.0, Tolerance::default());
        // antiderivative x^4/4 - x^2 + x
        let exact = (4.0 - 4.0 + 2.0) - (0.25 - 1.0 - 1.0);
        assert_abs_diff_eq!(v, exact, epsilon = 1e-13);
    }

    #[test]
    fn sqrt_endpoint_singularity() {
        let v = simpson(&|x: f64| x.sqrt(), 0.0, 1.0, Tolerance::default());
        assert_abs_diff_eq!(v, 2.0 / 3.0, epsilon = 1e-10);
    }

    #[test]
    fn exponential_and_power_tails() {
        let e = integrate(&|x: f64| (x - 1.0).exp(), f64::NEG_INFINITY, 1.0, &[], Tolerance::default());
        assert_abs_diff_eq!(e, 1.0, epsilon = 1e-10);
        // ∫_{-∞}^{-1} |x|^{-3} = 1/2
        let p = integrate(&|x: f64| x.abs().powi(-3), f64::NEG_INFINITY, -1.0, &[], Tolerance::default());
        assert_abs_diff_eq!(p, 0.5, epsilon = 1e-10);
        let g = integrate(
            &|x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt(),
            f64::NEG_INFINITY,
            f64::INFINITY,
            &[],
            Tolerance::default(),
        );
        assert_abs_diff_eq!(g, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn divergent_tail_grows_with_level() {
        let f = |x: f64| 1.0 / (1.0 + x.abs());
        let a = integrate_at_level(&f, f64::NEG_INFINITY, 0.0, &[], Tolerance::default(), 20.0);
        let b = integrate_at_level(&f, f64::NEG_INFINITY, 0.0, &[], Tolerance::default(), 20.0 + 2f64.ln());
        assert!((b - a) > 0.5);
    }

    #[test]
    fn bisection_finds_root() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14);
        assert_abs_diff_eq!(r, 2f64.sqrt(), epsilon = 1e-13);
    }
}
