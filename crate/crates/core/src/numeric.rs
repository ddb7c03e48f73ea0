//! Small scalar routines shared by the extraction code: bracketed bisection,
//! golden-section minimisation and a secant solver with a bracketing fallback.

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Finds a sign change of `f` inside `[lo, hi]` by bisection.
///
/// `f(lo)` and `f(hi)` must have opposite signs (or one of them be zero).
/// Stops when the bracket is narrower than `tol`; the midpoint is returned.
pub(crate) fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64
where
    F: FnMut(f64) -> f64,
{
    let mut f_lo = f(lo);
    if f_lo == 0.0 {
        return lo;
    }
    for _ in 0..200 {
        if (hi - lo).abs() <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section search for a minimum of `f` on `[a, b]`.
///
/// Returns `(x_min, f(x_min))`. The bracket endpoints are also considered so
/// a monotone function returns its lower endpoint.
pub(crate) fn golden_min<F>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let (lo_end, hi_end) = (a, b);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..300 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let mut best = if fc < fd { (c, fc) } else { (d, fd) };
    for x in [lo_end, hi_end] {
        let fx = f(x);
        if fx < best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Outcome of [`secant_solve`].
#[derive(Clone, Copy, Debug)]
pub(crate) struct SecantOutcome {
    pub x: f64,
    pub residual: f64,
    pub converged: bool,
}

/// Solves `f(x) = 0` from two starting guesses with the secant method.
///
/// Iterates are kept inside `[min, max]`; once a sign change has been seen
/// the step falls back to regula falsi (Illinois) on the known bracket.
pub(crate) fn secant_solve<F>(
    mut f: F,
    x0: f64,
    x1: f64,
    (min, max): (f64, f64),
    x_tol: f64,
    f_tol: f64,
    max_iter: usize,
) -> SecantOutcome
where
    F: FnMut(f64) -> f64,
{
    let clamp = |x: f64| x.clamp(min, max);
    let (mut xa, mut xb) = (clamp(x0), clamp(x1));
    let (mut fa, mut fb) = (f(xa), f(xb));
    let mut bracket: Option<(f64, f64, f64, f64)> = None;
    if fa.signum() != fb.signum() {
        bracket = Some((xa, fa, xb, fb));
    }
    let mut best = if fa.abs() < fb.abs() {
        (xa, fa)
    } else {
        (xb, fb)
    };
    for _ in 0..max_iter {
        if best.1.abs() <= f_tol {
            return SecantOutcome {
                x: best.0,
                residual: best.1,
                converged: true,
            };
        }
        let next = match bracket {
            Some((lo, flo, hi, fhi)) => {
                let x = (lo * fhi - hi * flo) / (fhi - flo);
                if x.is_finite() && x > lo.min(hi) && x < lo.max(hi) {
                    x
                } else {
                    0.5 * (lo + hi)
                }
            }
            None => {
                let denom = fb - fa;
                let x = if denom != 0.0 {
                    xb - fb * (xb - xa) / denom
                } else {
                    xb
                };
                clamp(if x.is_finite() { x } else { 0.5 * (xa + xb) })
            }
        };
        let fx = f(next);
        if fx.abs() < best.1.abs() {
            best = (next, fx);
        }
        if (next - xb).abs() <= x_tol * next.abs().max(1e-300) {
            return SecantOutcome {
                x: best.0,
                residual: best.1,
                converged: best.1.abs() <= f_tol,
            };
        }
        bracket = match bracket {
            Some((lo, flo, hi, fhi)) => {
                if fx.signum() == flo.signum() {
                    // Illinois: halve the retained end to avoid stagnation.
                    Some((next, fx, hi, 0.5 * fhi))
                } else {
                    Some((lo, 0.5 * flo, next, fx))
                }
            }
            None if fx.signum() != fb.signum() => Some((xb, fb, next, fx)),
            None => None,
        };
        xa = xb;
        fa = fb;
        xb = next;
        fb = fx;
    }
    SecantOutcome {
        x: best.0,
        residual: best.1,
        converged: best.1.abs() <= f_tol,
    }
}

/// Vertex of the parabola through three points with distinct abscissae.
///
/// Returns `None` when the points are collinear or the parabola opens
/// downward.
pub(crate) fn parabola_vertex(
    p0: (f64, f64),
    p1: (f64, f64),
    p2: (f64, f64),
) -> Option<(f64, f64)> {
    let (x0, y0) = p0;
    let (x1, y1) = p1;
    let (x2, y2) = p2;
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let a = (d12 - d01) / (x2 - x0);
    if !(a.is_finite()) || a <= 0.0 {
        return None;
    }
    let b = d01 - a * (x0 + x1);
    let xv = -b / (2.0 * a);
    // Newton form evaluated at the vertex.
    let yv = y0 + d01 * (xv - x0) + a * (xv - x0) * (xv - x1);
    Some((xv, yv))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_root() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14);
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn golden_finds_v_minimum() {
        let (x, fx) = golden_min(|x| (x - 0.3).abs(), -1.0, 2.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-11);
        assert!(fx < 1e-11);
    }

    #[test]
    fn secant_converges_without_initial_bracket() {
        let out = secant_solve(
            |x| x.powi(3) - 8.0,
            1.0,
            1.5,
            (0.0, 10.0),
            1e-15,
            1e-12,
            100,
        );
        assert!(out.converged);
        assert!((out.x - 2.0).abs() < 1e-12);
    }

    #[test]
    fn parabola_vertex_of_symmetric_points() {
        let v = parabola_vertex((-1.0, 3.0), (0.0, 1.0), (1.0, 3.0)).unwrap();
        assert_eq!(v, (0.0, 1.0));
        assert!(parabola_vertex((0.0, 1.0), (1.0, 0.0), (2.0, -1.0)).is_none());
    }
}
