/// The `s`-mean `M_s(a, b; lambda)` of two nonnegative numbers.
///
/// `s` may be `±inf` (max / min). For `s < 0` the mean vanishes as soon as
/// one argument does.
pub fn s_mean(a: f64, b: f64, lambda: f64, s: f64) -> f64 {
    debug_assert!(a >= 0.0 && b >= 0.0);
    debug_assert!(lambda > 0.0 && lambda < 1.0);
    if a == b {
        return a;
    }
    if s == f64::INFINITY {
        return a.max(b);
    }
    if s == f64::NEG_INFINITY {
        return a.min(b);
    }
    if s == 0.0 {
        return a.powf(1.0 - lambda) * b.powf(lambda);
    }
    if s < 0.0 {
        if a * b == 0.0 {
            return 0.0;
        }
        // scale by the smaller argument so every power stays <= 1
        let m = a.min(b);
        let inner = (1.0 - lambda) * (a / m).powf(s) + lambda * (b / m).powf(s);
        return m * inner.powf(1.0 / s);
    }
    let m = a.max(b);
    let inner = (1.0 - lambda) * (a / m).powf(s) + lambda * (b / m).powf(s);
    m * inner.powf(1.0 / s)
}
