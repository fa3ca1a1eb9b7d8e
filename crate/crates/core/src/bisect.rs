/// Iteration cap shared by every bisection in the crate.
pub(crate) const MAX_ITER: usize = 200;

/// Bisection on a bracket where `inside(lo)` holds and `inside(hi)` does not.
/// Returns the final `(lo, hi)` once `hi - lo <= width`, the midpoint stops
/// moving, or [`MAX_ITER`] halvings were done.
pub(crate) fn bisect_predicate<P>(mut lo: f64, mut hi: f64, width: f64, mut inside: P) -> (f64, f64)
where
    P: FnMut(f64) -> bool,
{
    for _ in 0..MAX_ITER {
        if hi - lo <= width {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if inside(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// Root of `f` on `[lo, hi]` given `f(lo) >= 0 >= f(hi)` or the reverse,
/// bisected down to machine resolution.
pub(crate) fn bisect_root<F>(lo: f64, hi: f64, f: F) -> f64
where
    F: Fn(f64) -> f64,
{
    let f_lo = f(lo);
    if f_lo == 0.0 {
        return lo;
    }
    let lo_positive = f_lo > 0.0;
    let (a, b) = bisect_predicate(lo, hi, 0.0, |x| {
        let v = f(x);
        v != 0.0 && (v > 0.0) == lo_positive
    });
    let (fa, fb) = (f(a).abs(), f(b).abs());
    if fa <= fb {
        a
    } else {
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt_two() {
        let r = bisect_root(1.0, 2.0, |x| x * x - 2.0);
        assert!((r - core::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn decreasing_function() {
        let r = bisect_root(0.0, 1.0, |x| 0.3 - x);
        assert!((r - 0.3).abs() < 1e-15);
    }

    #[test]
    fn root_at_endpoints() {
        assert_eq!(bisect_root(0.5, 1.0, |x| x - 0.5), 0.5);
        let r = bisect_root(0.0, 1.0, |x| x - 1.0);
        assert!((r - 1.0).abs() < 1e-15);
    }

    #[test]
    fn predicate_width() {
        let (lo, hi) = bisect_predicate(0.0, 1.0, 1e-6, |x| x < 0.25);
        assert!(lo < 0.25 && hi >= 0.25 && hi - lo <= 1e-6);
    }
}
