//! One-dimensional search helpers for convex objectives.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the minimizer of a unimodal `f` on `[a, b]`,
/// stopping once the bracket is narrower than `width`. Returns the final
/// bracket.
pub fn golden_section<F>(mut f: F, mut a: f64, mut b: f64, width: f64) -> Result<(f64, f64), crate::error::RjdError>
where
    F: FnMut(f64) -> Result<f64, crate::error::RjdError>,
{
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > width {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    Ok((a, b))
}

/// Bisection for the point where the predicate switches from false to
/// true on `[a, b]`, assuming `pred(a)` is false and `pred(b)` is true.
pub fn bisect<F>(mut pred: F, mut a: f64, mut b: f64, tol: f64) -> Result<f64, crate::error::RjdError>
where
    F: FnMut(f64) -> Result<bool, crate::error::RjdError>,
{
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if pred(mid)? {
            b = mid;
        } else {
            a = mid;
        }
    }
    Ok(0.5 * (a + b))
}
