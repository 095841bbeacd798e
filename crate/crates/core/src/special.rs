//! Real and complex gamma functions and the Lambert W function.

use num_complex::Complex64;
use std::f64::consts::{E, PI};

use crate::error::{MbError, Result};

/// `ln |Gamma(x)|`.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma_r(x).0
}

/// `ln |Gamma(x)|` and the sign of `Gamma(x)`.
pub fn ln_gamma_sign(x: f64) -> (f64, f64) {
    let (v, s) = libm::lgamma_r(x);
    (v, if s < 0 { -1.0 } else { 1.0 })
}

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// `1 / Gamma(x)`, exactly zero at the poles.
pub fn rgamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        return 0.0;
    }
    let (l, s) = ln_gamma_sign(x);
    s * (-l).exp()
}

/// `ln binom(a, k)` for real `a` and `k` with `a - k > -1`.
pub fn ln_binom(a: f64, k: f64) -> f64 {
    ln_gamma(a + 1.0) - ln_gamma(k + 1.0) - ln_gamma(a - k + 1.0)
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln sin(pi z)` on some branch, stable for large `|Im z|`.
fn ln_sin_pi(z: Complex64) -> Complex64 {
    let i = Complex64::i();
    let two_i_ln = Complex64::new(2f64.ln(), PI / 2.0);
    if z.im > 5.0 {
        // sin(pi z) = -e^{-i pi z} (1 - e^{2 i pi z}) / (2i)
        -i * PI * z + (1.0 - (2.0 * i * PI * z).exp()).ln() - two_i_ln + i * PI
    } else if z.im < -5.0 {
        i * PI * z + (1.0 - (-2.0 * i * PI * z).exp()).ln() - two_i_ln
    } else {
        (z * PI).sin().ln()
    }
}

/// Complex `ln Gamma(z)` (branch unspecified modulo `2 pi i`), Lanczos with reflection.
pub fn ln_gamma_c(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        Complex64::new(PI.ln(), 0.0) - ln_sin_pi(z) - ln_gamma_c(1.0 - z)
    } else {
        let z = z - 1.0;
        let mut a = Complex64::new(LANCZOS[0], 0.0);
        for (k, &c) in LANCZOS.iter().enumerate().skip(1) {
            a += c / (z + k as f64);
        }
        let t = z + LANCZOS_G + 0.5;
        0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + a.ln()
    }
}

/// `1 / Gamma(z)`, zero at the poles.
pub fn rgamma_c(z: Complex64) -> Complex64 {
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.floor() {
        return Complex64::new(0.0, 0.0);
    }
    (-ln_gamma_c(z)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WBranch {
    /// Principal branch; on the cut `t < -1/e` the value continuous from above.
    Principal,
    /// Limit from `Im t -> 0+`, which has `Im w > 0` on the cut.
    AboveCut,
}

/// Lambert W: `w e^w = t`, principal branch, by Halley iteration.
pub fn lambert_w(t: Complex64, branch: WBranch) -> Result<Complex64> {
    if t == Complex64::new(0.0, 0.0) {
        return Ok(t);
    }
    let on_cut = t.im == 0.0 && t.re < -1.0 / E;
    let t = if on_cut || branch == WBranch::AboveCut && t.im == 0.0 { Complex64::new(t.re, 0.0) } else { t };
    let bp = E * t + 1.0;
    let mut w = if bp.norm() < 1.0 {
        let mut p = (2.0 * bp).sqrt();
        if on_cut && p.im < 0.0 {
            p = -p;
        }
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if t.norm() < 0.5 {
        t - t * t + 1.5 * t * t * t
    } else {
        let l1 = t.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };
    if on_cut && w.im < 0.0 {
        w = w.conj();
    }
    if bp.norm() < 1e-10 {
        return Ok(w);
    }
    if t.norm() > 1e50 {
        // w + ln w = ln t avoids overflow in w e^w
        let lt = t.ln();
        let mut w = lt - lt.ln();
        for _ in 0..50 {
            let step = (w + w.ln() - lt) / (1.0 + 1.0 / w);
            w -= step;
            if step.norm() <= 1e-16 * w.norm() {
                break;
            }
        }
        return Ok(w);
    }
    let scale = t.norm().max(1.0);
    for _ in 0..100 {
        let ew = w.exp();
        let f = w * ew - t;
        if f.norm() == 0.0 {
            break;
        }
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        w -= step;
        if step.norm() <= 1e-16 * w.norm().max(1e-300) {
            let res = (w * w.exp() - t).norm();
            if res <= 1e-14 * scale {
                if on_cut && w.im < 0.0 {
                    w = w.conj();
                }
                return Ok(w);
            }
        }
    }
    let res = (w * w.exp() - t).norm();
    if res <= 1e-14 * scale {
        if on_cut && w.im < 0.0 {
            w = w.conj();
        }
        return Ok(w);
    }
    Err(MbError::Convergence(format!("lambert_w at {t}: residual {res:e}")))
}

/// `W(e^lt)` without forming `e^lt`; for `Im lt = pi` the value above the
/// cut. Intended for large `Re lt`.
pub fn lambert_w_exp(lt: Complex64) -> Result<Complex64> {
    if lt.re < 100.0 {
        let t = lt.exp();
        if (lt.im - PI).abs() < 1e-15 {
            return lambert_w(Complex64::new(t.re, 0.0), WBranch::AboveCut);
        }
        return lambert_w(t, WBranch::Principal);
    }
    let mut w = lt - lt.ln();
    for _ in 0..50 {
        let step = (w + w.ln() - lt) / (1.0 + 1.0 / w);
        w -= step;
        if step.norm() <= 1e-16 * w.norm() {
            break;
        }
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn real_gamma() {
        assert!((gamma(5.0) - 24.0).abs() < 1e-12);
        assert_eq!(rgamma(-3.0), 0.0);
        assert!((rgamma(0.5) - 1.0 / PI.sqrt()).abs() < 1e-15);
        let (l, s) = ln_gamma_sign(-0.5);
        assert!((s * l.exp() + 2.0 * PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn complex_gamma_matches_real() {
        for &x in &[0.1, 0.5, 1.0, 2.5, 7.3, 30.0, -0.5, -2.7] {
            let z = ln_gamma_c(c(x, 0.0)).exp().re;
            assert!((z - gamma(x)).abs() < 1e-12 * gamma(x).abs(), "x={x}");
        }
    }

    #[test]
    fn complex_gamma_known_values() {
        // |Gamma(iy)|^2 = pi / (y sinh(pi y))
        for &y in &[0.5, 1.0, 3.0, 10.0, 40.0] {
            let m = ln_gamma_c(c(0.0, y)).re;
            let want = 0.5 * (PI / (y * (PI * y).sinh())).ln();
            assert!((m - want).abs() < 1e-12 * want.abs().max(1.0), "y={y}");
        }
        // |Gamma(1/2 + iy)|^2 = pi / cosh(pi y)
        for &y in &[0.3, 2.0, 25.0] {
            let m = ln_gamma_c(c(0.5, y)).re;
            let want = 0.5 * (PI / (PI * y).cosh()).ln();
            assert!((m - want).abs() < 1e-12 * want.abs().max(1.0));
        }
    }

    proptest! {
        #[test]
        fn gamma_recurrence(re in -20.0f64..20.0, im in -30.0f64..30.0) {
            prop_assume!(im.abs() > 0.1 || (re - re.round()).abs() > 0.1);
            let z = c(re, im);
            let lhs = (ln_gamma_c(z + 1.0) - ln_gamma_c(z)).exp();
            prop_assert!((lhs - z).norm() < 1e-10 * z.norm().max(1.0));
        }

        #[test]
        fn lambert_residual(re in -50.0f64..50.0, im in -50.0f64..50.0) {
            let t = c(re, im);
            let w = lambert_w(t, WBranch::Principal).unwrap();
            prop_assert!((w * w.exp() - t).norm() <= 1e-14 * t.norm().max(1.0));
            // principal branch: Im w in (-pi, pi)
            prop_assert!(w.im.abs() < PI);
        }
    }

    #[test]
    fn lambert_large_argument() {
        for &t in &[1e60, 1e200, 1e300] {
            let w = lambert_w(c(-t, 0.0), WBranch::AboveCut).unwrap();
            assert!(w.im > 0.0);
            assert!((w + w.ln() - c(t.ln(), PI)).norm() < 1e-13 * w.norm());
            let w = lambert_w(c(t, 0.0), WBranch::Principal).unwrap();
            assert!((w + w.ln() - t.ln()).norm() < 1e-13 * w.norm() && w.im.abs() < 1e-15);
        }
    }

    #[test]
    fn lambert_exp_form() {
        for &l in &[2.0, 50.0, 99.0, 101.0, 1e4] {
            let lt = c(l, PI);
            let w = lambert_w_exp(lt).unwrap();
            assert!(w.im > 0.0 && (w + w.ln() - lt).norm() < 1e-13 * w.norm(), "{l}");
        }
    }

    #[test]
    fn lambert_examples() {
        assert_eq!(lambert_w(c(0.0, 0.0), WBranch::Principal).unwrap(), c(0.0, 0.0));
        assert!((lambert_w(c(E, 0.0), WBranch::Principal).unwrap() - 1.0).norm() < 1e-15);
        assert!((lambert_w(c(-1.0 / E, 0.0), WBranch::Principal).unwrap() + 1.0).norm() < 1e-7);
        let w = lambert_w(c(-1.0, 0.0), WBranch::AboveCut).unwrap();
        assert!((w - c(-0.318_131_505_204_764_1, 1.337_235_701_430_689_4)).norm() < 1e-14);
        // real principal values stay real
        let w = lambert_w(c(2.0, 0.0), WBranch::Principal).unwrap();
        assert!(w.im.abs() < 1e-15 && (w.re - 0.852_605_502_013_725_5).abs() < 1e-15);
    }

    #[test]
    fn lambert_above_cut_has_positive_imaginary_part() {
        for k in 1..400 {
            let t = -1.0 / E - 1e-4 * (k * k) as f64;
            let w = lambert_w(c(t, 0.0), WBranch::AboveCut).unwrap();
            assert!(w.im > 0.0);
            // continuity from above
            let w2 = lambert_w(c(t, 1e-9), WBranch::Principal).unwrap();
            assert!((w - w2).norm() < 1e-6);
        }
    }
}
