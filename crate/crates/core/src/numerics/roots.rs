use super::Interval;
use crate::{Error, Result};

/// Bracketed root by Brent's hybrid of secant, inverse quadratic
/// interpolation and bisection. Exact zeros at an endpoint return that
/// endpoint, the lower one first.
pub fn find_root(mut f: impl FnMut(f64) -> f64, iv: Interval, tol: f64) -> Result<f64> {
    let (mut a, mut b) = (iv.lo, iv.hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
        return Err(Error::NoSignChange { lo: a, hi: b });
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            if 2.0 * p < (3.0 * xm * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
        if !fb.is_finite() {
            return Err(Error::NonFiniteIntegrand { x: b });
        }
    }
    Ok(b)
}

/// Grow an interval around `x0` geometrically until `f` changes sign or the
/// limits are hit.
pub fn expand_bracket(
    mut f: impl FnMut(f64) -> f64,
    x0: f64,
    step: f64,
    limits: Interval,
) -> Result<Interval> {
    let mut lo = limits.clamp(x0 - step);
    let mut hi = limits.clamp(x0 + step);
    let mut flo = f(lo);
    let mut fhi = f(hi);
    let mut s = step;
    for _ in 0..200 {
        if flo.signum() != fhi.signum() || flo == 0.0 || fhi == 0.0 {
            return Interval::new(lo, hi).or(Err(Error::NoSignChange { lo, hi }));
        }
        if lo <= limits.lo && hi >= limits.hi {
            break;
        }
        s *= 2.0;
        if flo.abs() < fhi.abs() && lo > limits.lo || hi >= limits.hi {
            lo = limits.clamp(lo - s);
            flo = f(lo);
        } else {
            hi = limits.clamp(hi + s);
            fhi = f(hi);
        }
    }
    Err(Error::NoSignChange { lo, hi })
}

/// Maximize a unimodal function on `[lo, hi]` by golden-section search.
/// Returns `(argmax, max)`.
pub fn golden_section_max(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_ratio_root() {
        let iv = Interval::new(0.0, 1.0).unwrap();
        let r = find_root(|x| x * x + x - 1.0, iv, 1e-14).unwrap();
        assert!((r - 0.618_033_988_749_894_8).abs() < 1e-12);
    }

    #[test]
    fn cosine_root() {
        let iv = Interval::new(1.0, 2.0).unwrap();
        let r = find_root(f64::cos, iv, 1e-15).unwrap();
        assert!((r - std::f64::consts::FRAC_PI_2).abs() < 1e-14);
    }

    #[test]
    fn endpoint_zero_prefers_lower() {
        let iv = Interval::new(0.0, 1.0).unwrap();
        assert_eq!(find_root(|x| x * (x - 1.0), iv, 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn no_sign_change() {
        let iv = Interval::new(-1.0, 1.0).unwrap();
        assert!(matches!(find_root(|x| x * x + 1.0, iv, 1e-12), Err(Error::NoSignChange { .. })));
    }

    #[test]
    fn bracket_expansion_finds_far_root() {
        let lim = Interval::new(-1e6, 1e6).unwrap();
        let b = expand_bracket(|x| x - 500.0, 0.0, 1.0, lim).unwrap();
        assert!(b.lo <= 500.0 && b.hi >= 500.0);
    }

    #[test]
    fn golden_section_parabola() {
        let (x, v) = golden_section_max(|x| -(x - 0.3) * (x - 0.3) + 2.0, -1.0, 1.0, 1e-10);
        // a flat maximum only resolves the argmax to about sqrt(eps)
        assert!((x - 0.3).abs() < 1e-7 && (v - 2.0).abs() < 1e-14);
    }
}
