//! Bracketing root finders for monotone scalar functions.

use crate::Scalar;

/// Stopping rule for [`bisect`]: the bracket is accepted once its width is
/// below `max(abs, rel * max(|lo|, |hi|))`, or when the midpoint is no longer
/// representable strictly inside it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub const fn relative(rel: f64) -> Self {
        Self { abs: 0.0, rel }
    }

    pub const fn absolute(abs: f64) -> Self {
        Self { abs, rel: 0.0 }
    }

    /// Bisect until no further progress is possible.
    pub const fn machine() -> Self {
        Self { abs: 0.0, rel: 0.0 }
    }
}

/// Bisection on `[lo, hi]` where `f(lo)` and `f(hi)` have opposite signs (or
/// one of them is zero). Returns `None` when the endpoints do not bracket.
pub fn bisect<T, F>(mut f: F, lo: T, hi: T, tol: Tolerance) -> Option<T>
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    let (mut lo, mut hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let f_lo = f(lo);
    if f_lo == T::zero() {
        return Some(lo);
    }
    let f_hi = f(hi);
    if f_hi == T::zero() {
        return Some(hi);
    }
    if f_lo.is_nan() || f_hi.is_nan() || f_lo.signum() == f_hi.signum() {
        return None;
    }
    let lo_positive = f_lo > T::zero();
    let two = T::lit(2.0);
    loop {
        let width = hi - lo;
        let scale = lo.abs().max(hi.abs());
        let target = T::lit(tol.abs).max(T::lit(tol.rel) * scale);
        let mid = lo + width / two;
        if width <= target || mid <= lo || mid >= hi {
            return Some(mid);
        }
        let fm = f(mid);
        if fm == T::zero() {
            return Some(mid);
        }
        if (fm > T::zero()) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// Outcome of a failed geometric bracket search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoBracket<T> {
    pub expansions: usize,
    pub last: T,
}

/// Finds `0 < lo < hi` with `f(lo) > 0 > f(hi)` for a function that is
/// decreasing on `(0, inf)`, starting at `start` and multiplying or dividing by
/// `factor` until the sign changes. An exact zero is not treated as a sign
/// change, so a function that only touches zero asymptotically fails cleanly.
pub fn expand_decreasing_bracket<T, F>(
    mut f: F,
    start: T,
    factor: T,
    max_expansions: usize,
) -> Result<(T, T), NoBracket<T>>
where
    T: Scalar,
    F: FnMut(T) -> T,
{
    let f0 = f(start);
    if f0.is_nan() {
        return Err(NoBracket {
            expansions: 0,
            last: start,
        });
    }
    let mut y = start;
    if f0 > T::zero() {
        for k in 1..=max_expansions {
            let next = y * factor;
            let fv = f(next);
            if fv < T::zero() {
                return Ok((y, next));
            }
            if fv.is_nan() || !next.is_finite() {
                return Err(NoBracket {
                    expansions: k,
                    last: next,
                });
            }
            y = next;
        }
    } else {
        for k in 1..=max_expansions {
            let next = y / factor;
            let fv = f(next);
            if fv > T::zero() {
                return Ok((next, y));
            }
            if fv.is_nan() || next == T::zero() {
                return Err(NoBracket {
                    expansions: k,
                    last: next,
                });
            }
            y = next;
        }
    }
    Err(NoBracket {
        expansions: max_expansions,
        last: y,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt_two() {
        let root = bisect(|x: f64| x * x - 2.0, 0.0, 2.0, Tolerance::relative(1e-14)).unwrap();
        assert!((root - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn bisect_rejects_non_bracket() {
        assert!(bisect(|x: f64| x * x + 1.0, -1.0, 1.0, Tolerance::machine()).is_none());
    }

    #[test]
    fn bisect_terminates_in_f32_below_epsilon() {
        let root = bisect(|x: f32| x - 0.3, 0.0, 1.0, Tolerance::relative(1e-20)).unwrap();
        assert!((root - 0.3).abs() < 1e-6);
    }

    #[test]
    fn expansion_both_directions() {
        // Root at 1e5 (expand upward) and at 1e-5 (expand downward).
        let (lo, hi) = expand_decreasing_bracket(|y: f64| 1e5 - y, 1.0, 10.0, 60).unwrap();
        assert!(lo <= 1e5 && 1e5 < hi);
        let (lo, hi) = expand_decreasing_bracket(|y: f64| 1e-5 / y - 1.0, 1.0, 10.0, 60).unwrap();
        assert!(lo < 1e-5 && 1e-5 <= hi * 1.000001);
    }

    #[test]
    fn expansion_fails_on_positive_function() {
        let err = expand_decreasing_bracket(|y: f64| 1.0 / y + 0.5, 1.0, 10.0, 60).unwrap_err();
        assert_eq!(err.expansions, 60);
    }
}
