//! Hard-edge limits: Wright's Bessel function, the Borodin kernel in its
//! integral and double contour forms, and the Kuijlaars-Zhang kernel.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::ckernel::ResidueKernel;
use crate::error::{domain, Result};
use crate::harness::VerifyReport;
use crate::params::{EnsembleParams, Family};
use crate::quad::{self, hankel_loop, ContourSpec, GlRule};
use crate::special::{ln_gamma, ln_gamma_c, ln_gamma_sign};

/// `J_{a,b}(x) = sum_j (-x)^j / (j! Gamma(a + j b))`.
pub fn wright_bessel(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(b > 0.0) {
        return domain(format!("Wright function needs b > 0, got {b}"));
    }
    if !x.is_finite() || x.abs() > 1e6 {
        return domain(format!("Wright argument {x} out of range"));
    }
    if x == 0.0 {
        return Ok(crate::special::rgamma(a));
    }
    let lx = x.abs().ln();
    let ln_term = |j: usize| lx * j as f64 - ln_gamma(j as f64 + 1.0) - ln_gamma(a + b * j as f64);
    // locate the largest term and the truncation point
    let mut peak = f64::NEG_INFINITY;
    let mut last = 0;
    for j in 0.. {
        let t = ln_term(j);
        peak = peak.max(t);
        last = j;
        let past_peak = (j as f64) > x.abs() && a + b * j as f64 > 1.0;
        if past_peak && t < peak - 40.0 * std::f64::consts::LN_10 / 2.0 - 2.0 {
            break;
        }
        if j > 100_000 {
            break;
        }
    }
    let alternating = x > 0.0;
    if !alternating || peak < 2.0 {
        let mut s = 0.0;
        let mut comp = 0.0;
        for j in 0..=last {
            let (lg, sg) = ln_gamma_sign(a + b * j as f64);
            let arg = a + b * j as f64;
            if arg <= 0.0 && arg == arg.floor() {
                continue;
            }
            let mut t = sg * (lx * j as f64 - ln_gamma(j as f64 + 1.0) - lg).exp();
            if alternating && j % 2 == 1 {
                t = -t;
            }
            // Neumaier summation
            let u = s + t;
            comp += if s.abs() >= t.abs() { (s - u) + t } else { (t - u) + s };
            s = u;
        }
        return Ok(s + comp);
    }
    // cancellation of about peak / ln 2 bits
    let prec = 64 + (peak / std::f64::consts::LN_2).ceil() as u32 + 16;
    let xm = Float::with_val(prec, -x);
    let mut pw = Float::with_val(prec, 1.0);
    let mut fact = Float::with_val(prec, 1.0);
    let mut s = Float::with_val(prec, 0.0);
    for j in 0..=last {
        if j > 0 {
            pw *= &xm;
            fact *= j as f64;
        }
        let arg = a + b * j as f64;
        if arg <= 0.0 && arg == arg.floor() {
            continue;
        }
        let g = Float::with_val(prec, arg).gamma();
        s += Float::with_val(prec, &pw / &fact) / g;
    }
    Ok(s.to_f64())
}

fn check_hard_edge(c: f64, theta: f64, x: f64, y: f64) -> Result<()> {
    if !(c > -1.0) || !(theta > 0.0) {
        return domain(format!("need c > -1 and theta > 0, got c={c}, theta={theta}"));
    }
    if !(x > 0.0 && y > 0.0) {
        return domain("hard-edge kernel arguments must be positive");
    }
    Ok(())
}

/// `K^{(c, theta)}(x, y) = theta x^c int_0^1 J_{(c+1)/theta, 1/theta}(x u) J_{c+1, theta}((y u)^theta) u^c du`.
pub fn borodin_kernel(c: f64, theta: f64, x: f64, y: f64) -> Result<f64> {
    check_hard_edge(c, theta, x, y)?;
    let a1 = (c + 1.0) / theta;
    let f = |u: f64| {
        let j1 = wright_bessel(a1, 1.0 / theta, x * u).unwrap_or(f64::NAN);
        let j2 = wright_bessel(c + 1.0, theta, (y * u).powf(theta)).unwrap_or(f64::NAN);
        j1 * j2 * u.powf(c)
    };
    // the integrand oscillates on a scale set by the larger argument
    let pieces = (1.0 + 0.5 * x.max(y).sqrt()).ceil() as usize;
    let v = quad::integrate(f, 0.0, 1.0 / pieces as f64, 1e-14)
        + if pieces > 1 { quad::integrate_split(f, 1.0 / pieces as f64, 1.0, pieces - 1, 1e-14) } else { 0.0 };
    Ok(theta * x.powf(c) * v)
}

/// Classical hard-edge Bessel kernel `int_0^1 J_c(2 sqrt(xu)) J_c(2 sqrt(yu)) du`
/// in closed form, with `J_c` from its power series.
pub fn bessel_kernel(c: f64, x: f64, y: f64) -> f64 {
    let j = |nu: f64, z: f64| -> f64 {
        let h = 0.5 * z;
        let mut s = 0.0;
        for k in 0..200 {
            let t = (-1f64).powi(k) * ((2 * k) as f64 * h.ln() + nu * h.ln() - ln_gamma(k as f64 + 1.0)).exp()
                * crate::special::rgamma(nu + k as f64 + 1.0);
            s += t;
            if k > 5 && t.abs() < 1e-18 * s.abs() {
                break;
            }
        }
        s
    };
    let (sx, sy) = (x.sqrt(), y.sqrt());
    let (ax, ay) = (2.0 * sx, 2.0 * sy);
    if (x - y).abs() < 1e-9 * x {
        // limit on the diagonal: J_c(a)^2 - J_{c+1}(a) J_{c-1}(a), a = 2 sqrt x
        let a = ax;
        return j(c, a).powi(2) - j(c + 1.0, a) * j(c - 1.0, a);
    }
    // J_c'(z) = J_{c-1}(z) - (c/z) J_c(z)
    let dj = |z: f64| j(c - 1.0, z) - c / z * j(c, z);
    (sy * j(c, ax) * dj(ay) - sx * dj(ax) * j(c, ay)) / (x - y)
}

/// Ray angle beyond the vertical for the `z` contour.
pub const RAY_DELTA: f64 = PI / 4.0;

/// Quadrature settings for the hard-edge contour forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourOptions {
    pub degree: usize,
    /// Initial panel size relative to the gap between the two contours.
    pub refine: f64,
}

impl Default for ContourOptions {
    fn default() -> Self {
        Self { degree: 24, refine: 0.5 }
    }
}

/// Two rays from `vertex` towards `e^{+-i(pi/2 + delta)} infinity`, upward.
fn sigma_rays<F: Fn(Complex64) -> f64>(rule: &GlRule, vertex: f64, h0: f64, ln_abs: F) -> ContourSpec {
    let v = Complex64::new(vertex, 0.0);
    let up = Complex64::from_polar(1.0, PI / 2.0 + RAY_DELTA);
    let mut best = f64::NEG_INFINITY;
    let mut r = 0.0;
    let len = loop {
        r += 0.25;
        let t = ln_abs(v + up * r).max(ln_abs(v + up.conj() * r));
        best = best.max(t);
        if (r > 2.0 && t < best - 42.0) || r > 2e3 {
            break r;
        }
    };
    crate::quad::hankel_rays(rule, v, PI / 2.0 - RAY_DELTA, len, h0)
}

/// Right end of the `w` loop: where the integrand has decayed by `e^{-42}`.
fn loop_right<F: Fn(Complex64) -> f64>(ln_abs: F) -> f64 {
    let mut best = f64::NEG_INFINITY;
    let mut r = 1.0;
    loop {
        let t = ln_abs(Complex64::new(r, 0.5));
        best = best.max(t);
        if (r >= 40.0 && t < best - 42.0) || r > 2e3 {
            return r;
        }
        r += 1.0;
    }
}

/// `(2 pi i)^{-2} int_Sigma dz int_Gamma0 dw ln_f(z) ln_g(w) / (z - w)` where
/// the integrand factors are given in log form.
fn contour_pair<F, G>(vertex: f64, opts: ContourOptions, ln_f: F, ln_g: G) -> f64
where
    F: Fn(Complex64) -> Complex64 + Sync,
    G: Fn(Complex64) -> Complex64,
{
    let rule = GlRule::new(opts.degree);
    let left = 0.5 * vertex;
    let gap = -left;
    let h0 = opts.refine * gap;
    let zc = sigma_rays(&rule, vertex, h0, |z| ln_f(z).re);
    let right = loop_right(|w| ln_g(w).re);
    let wc = hankel_loop(&rule, left, right, 0.5, h0);
    let gw: Vec<(Complex64, Complex64)> = wc.nodes.iter().map(|&(w, dw)| (w, ln_g(w).exp() * dw)).collect();
    let total: Complex64 = zc
        .nodes
        .par_iter()
        .map(|&(z, dz)| {
            let inner: Complex64 = gw.iter().map(|&(w, gd)| gd / (z - w)).sum();
            ln_f(z).exp() * dz * inner
        })
        .sum();
    let tpi = Complex64::new(0.0, 2.0 * PI);
    (total / (tpi * tpi)).re
}

/// `ln(-pi / Gamma(-z))`, i.e. `ln(Gamma(z + 1) sin(pi z))`.
fn ln_gamma_sin(z: Complex64) -> Complex64 {
    Complex64::new(PI.ln(), PI) - ln_gamma_c(-z)
}

/// `ln(1 / (Gamma(w + 1) sin(pi w)))`.
fn ln_inv_gamma_sin(w: Complex64) -> Complex64 {
    ln_gamma_c(-w) - Complex64::new(PI.ln(), PI)
}

/// Borodin kernel from its double contour integral.
pub fn borodin_kernel_contour(c: f64, theta: f64, x: f64, y: f64) -> Result<f64> {
    borodin_kernel_contour_with(c, theta, x, y, ContourOptions::default())
}

pub fn borodin_kernel_contour_with(c: f64, theta: f64, x: f64, y: f64, opts: ContourOptions) -> Result<f64> {
    check_hard_edge(c, theta, x, y)?;
    // between the poles of Gamma(theta z + c + 1) and the origin
    let vertex = -(c + 1.0) / (2.0 * theta);
    let (lx, ly) = (x.ln(), y.ln());
    let v = contour_pair(
        vertex,
        opts,
        |z| (-theta * z - 1.0) * lx + ln_gamma_c(theta * z + c + 1.0) + ln_gamma_sin(z),
        |w| theta * w * ly - ln_gamma_c(theta * w + c + 1.0) + ln_inv_gamma_sin(w),
    );
    Ok(theta * v)
}

/// Kuijlaars-Zhang kernel `K_{nu_1..nu_M}(x, y)`; `nu_0 = 0` is implicit.
pub fn kz_kernel(nu: &[f64], x: f64, y: f64) -> Result<f64> {
    kz_kernel_with(nu, x, y, ContourOptions::default())
}

pub fn kz_kernel_with(nu: &[f64], x: f64, y: f64, opts: ContourOptions) -> Result<f64> {
    if nu.iter().any(|&v| !(v > -1.0)) {
        return domain("all nu_j must exceed -1");
    }
    if !(x > 0.0 && y > 0.0) {
        return domain("kernel arguments must be positive");
    }
    let nu_min = nu.iter().copied().fold(0.0, f64::min);
    let vertex = -(1.0 + nu_min) / 2.0;
    let (lx, ly) = (x.ln(), y.ln());
    Ok(contour_pair(
        vertex,
        opts,
        |z| {
            let mut v = (-z - 1.0) * ly + ln_gamma_sin(z);
            for &n in nu {
                v += ln_gamma_c(z + 1.0 + n);
            }
            v
        },
        |w| {
            let mut v = w * lx + ln_inv_gamma_sin(w);
            for &n in nu {
                v -= ln_gamma_c(w + 1.0 + n);
            }
            v
        },
    ))
}

/// `nu_j = c/theta - 1 + j/theta`, `j = 1..theta`, for integer `theta`.
pub fn kz_nu_for(c: f64, theta: usize) -> Vec<f64> {
    let t = theta as f64;
    (1..=theta).map(|j| c / t - 1.0 + j as f64 / t).collect()
}

/// Limit of the scaled finite-N kernel, `(y/x)^{c/2} K^{(c, theta)}(x, y)`.
pub fn hard_edge_limit(c: f64, theta: f64, x: f64, y: f64) -> Result<f64> {
    Ok((y / x).powf(0.5 * c) * borodin_kernel(c, theta, x, y)?)
}

/// Errors of the scaled finite-N kernel against the hard-edge limit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HardEdgeConvergence {
    pub n_list: Vec<usize>,
    pub errors: Vec<f64>,
}

impl HardEdgeConvergence {
    pub fn strictly_decreasing(&self) -> bool {
        self.errors.windows(2).all(|w| w[1] < w[0])
    }

    pub fn last_error(&self) -> f64 {
        *self.errors.last().unwrap_or(&f64::NAN)
    }
}

/// `e_N = max_points |s K_N(s x, s y) - (y/x)^{c/2} K^{(c,theta)}(x, y)| / |limit|`,
/// `s = N^{-1/theta}` (Laguerre) or `N^{-1-1/theta}` (Jacobi).
pub fn hard_edge_errors(params: &EnsembleParams, n_list: &[usize], points: &[(f64, f64)]) -> Result<HardEdgeConvergence> {
    let theta = params.theta;
    if params.family == Family::LaguerreThetaZero || theta <= 0.0 {
        return domain("hard-edge limit needs theta > 0");
    }
    let limits: Vec<f64> = points.iter().map(|&(x, y)| hard_edge_limit(params.c, theta, x, y)).collect::<Result<_>>()?;
    let mut errors = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let p = EnsembleParams { n, ..*params }.validated()?;
        let k = ResidueKernel::new(&p)?;
        let nf = n as f64;
        let s = match p.family {
            Family::Jacobi => nf.powf(-1.0 - 1.0 / theta),
            _ => nf.powf(-1.0 / theta),
        };
        let e = points
            .par_iter()
            .zip(&limits)
            .map(|(&(x, y), &lim)| Ok((s * k.eval(s * x, s * y)? - lim).abs() / lim.abs()))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        errors.push(e);
    }
    Ok(HardEdgeConvergence { n_list: n_list.to_vec(), errors })
}

/// Passes when `e_N` decreases strictly along `n_list` and the last error
/// is below `threshold`.
pub fn hard_edge_convergence(params: &EnsembleParams, n_list: &[usize], points: &[(f64, f64)], threshold: f64) -> VerifyReport {
    let start = Instant::now();
    let name = format!("hard-edge-convergence-{}", params.family);
    match hard_edge_errors(params, n_list, points) {
        Ok(conv) => {
            // a non-monotone ladder fails regardless of its last error
            let stat = if conv.strictly_decreasing() { conv.last_error() } else { f64::INFINITY };
            VerifyReport::new(&name, stat, threshold, stat <= threshold, 0, 0, start.elapsed().as_secs_f64())
                .with_detail(format!("N={:?} e_N={:?}", conv.n_list, conv.errors))
        }
        Err(e) => VerifyReport::failed(&name, threshold, start.elapsed().as_secs_f64(), &e.to_string()),
    }
}
