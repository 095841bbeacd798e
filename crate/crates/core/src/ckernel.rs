//! Finite-N correlation kernels.
//!
//! The double contour integral is evaluated by residues: the inner `w`
//! integral picks up the simple poles at `alpha_l`, after which the outer
//! integrand in `z` has poles only at the negative integers. Summing those
//! in closed form gives, with `P(p) = sum_l A_l prod_{j != l} (-p-1-alpha_j)`,
//!
//! `K^L(x, y) = (x/y)^{c/2} e^{(x-y)/2} e^{-x} sum_{k<N} (-x)^k/k! Delta^k P(0)`
//!
//! and for Jacobi with `M = c2 + N`,
//!
//! `sum_{k<N} Delta^k P(0) (-x)^k (1-x)^{M-1-k} / (k! Gamma(M-k))`.
//!
//! The cancellation in these sums is severe for large N, so everything is
//! done in MPFR at a precision that is doubled until two successive results
//! agree.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rayon::prelude::*;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{domain, MbError, Result};
use crate::params::{EnsembleParams, Family};
use crate::quad::{self, closed_rectangle, hankel_rays, ContourSpec, GlRule};
use crate::special::ln_gamma_c;

const START_PREC: u32 = 128;
const MAX_PREC: u32 = 1 << 16;
const AGREE: f64 = 1e-15;
/// Spacing used to split the coincident exponents of the theta = 0 ensemble.
const THETA0_SPLIT: f64 = 1e-9;

fn mp(prec: u32, v: f64) -> Float {
    Float::with_val(prec, v)
}

fn agree(a: &Float, b: &Float) -> bool {
    let (a, b) = (a.to_f64(), b.to_f64());
    if !a.is_finite() || !b.is_finite() {
        return false;
    }
    (a - b).abs() <= AGREE * a.abs().max(b.abs()) || (a.abs() < 1e-300 && b.abs() < 1e-300)
}

/// Runs `f` at doubling precisions until two consecutive values agree.
fn adaptive<F: Fn(u32) -> Float>(start: &AtomicU32, f: F) -> Result<f64> {
    let mut p = start.load(Ordering::Relaxed).max(START_PREC);
    let mut lo = f(p);
    while p < MAX_PREC {
        let hi = f(2 * p);
        if agree(&lo, &hi) {
            start.store(p, Ordering::Relaxed);
            return Ok(hi.to_f64());
        }
        p *= 2;
        lo = hi;
    }
    Err(MbError::Convergence(format!("kernel sum did not stabilise below {MAX_PREC} bits")))
}

/// Exponents used by the residue sum; coincident values are split.
fn kernel_alpha(params: &EnsembleParams) -> Vec<f64> {
    let mut a = params.alpha().values;
    if params.family == Family::LaguerreThetaZero || params.theta == 0.0 {
        if a.len() > 1 {
            log::warn!("coincident exponents split by {THETA0_SPLIT:e} for the residue sum");
        }
        for (l, v) in a.iter_mut().enumerate() {
            *v += THETA0_SPLIT * l as f64;
        }
    }
    a
}

/// Residue-sum kernel with per-precision caches, for repeated evaluation.
#[derive(Debug)]
pub struct ResidueKernel {
    params: EnsembleParams,
    alpha: Vec<f64>,
    cache: Mutex<HashMap<u32, Arc<Vec<Float>>>>,
    start: AtomicU32,
}

impl ResidueKernel {
    pub fn new(params: &EnsembleParams) -> Result<Self> {
        let params = params.validated()?;
        Ok(Self { alpha: kernel_alpha(&params), params, cache: Mutex::new(HashMap::new()), start: AtomicU32::new(START_PREC) })
    }

    pub fn params(&self) -> &EnsembleParams {
        &self.params
    }

    fn is_jacobi(&self) -> bool {
        self.params.family == Family::Jacobi
    }

    fn big_m(&self) -> f64 {
        self.params.c2 + self.params.n as f64
    }

    /// `1 / (Gamma(alpha_l + 1) prod_{m != l} (alpha_l - alpha_m))`, times
    /// `Gamma(alpha_l + M + 1)` for Jacobi.
    fn coefficients(&self, prec: u32) -> Arc<Vec<Float>> {
        if let Some(v) = self.cache.lock().unwrap().get(&prec) {
            return v.clone();
        }
        let a: Vec<Float> = self.alpha.iter().map(|&v| mp(prec, v)).collect();
        let m = self.big_m();
        let coef: Vec<Float> = (0..a.len())
            .map(|l| {
                let mut d = Float::with_val(prec, &a[l] + 1.0).gamma();
                for (j, aj) in a.iter().enumerate() {
                    if j != l {
                        d *= Float::with_val(prec, &a[l] - aj);
                    }
                }
                let mut r = Float::with_val(prec, d.recip_ref());
                if self.is_jacobi() {
                    r *= Float::with_val(prec, &a[l] + (m + 1.0)).gamma();
                }
                r
            })
            .collect();
        let coef = Arc::new(coef);
        self.cache.lock().unwrap().insert(prec, coef.clone());
        coef
    }

    fn check_domain(&self, x: f64, y: f64) -> Result<()> {
        let ok = |t: f64| t > 0.0 && t.is_finite() && (!self.is_jacobi() || t < 1.0);
        if !ok(x) || !ok(y) {
            return domain(format!("kernel arguments ({x}, {y}) outside the domain"));
        }
        Ok(())
    }

    fn eval_prec(&self, x: f64, y: f64, prec: u32) -> Float {
        let n = self.alpha.len();
        let coef = self.coefficients(prec);
        let alpha: Vec<Float> = self.alpha.iter().map(|&v| mp(prec, v)).collect();
        let ly = mp(prec, y).ln();
        let a: Vec<Float> = alpha.iter().zip(coef.iter()).map(|(al, cf)| Float::with_val(prec, al * &ly).exp() * cf).collect();
        let mut d: Vec<Float> = (0..n)
            .map(|p| {
                let t: Vec<Float> = alpha.iter().map(|al| -Float::with_val(prec, al + (p as f64 + 1.0))).collect();
                let mut full = mp(prec, 1.0);
                for tj in &t {
                    full *= tj;
                }
                let mut s = mp(prec, 0.0);
                for (al, tl) in a.iter().zip(&t) {
                    s += Float::with_val(prec, al * &full) / tl;
                }
                s
            })
            .collect();
        // Newton forward differences at 0
        let mut diffs = Vec::with_capacity(n);
        for k in 0..n {
            diffs.push(d[0].clone());
            for i in 0..(n - 1 - k) {
                let t = Float::with_val(prec, &d[i + 1] - &d[i]);
                d[i] = t;
            }
        }
        let xm = mp(prec, x);
        let (c, c2) = (self.params.c, self.params.c2);
        if self.is_jacobi() {
            let m = self.big_m();
            let one_minus = mp(prec, 1.0) - &xm;
            let l1x = Float::with_val(prec, one_minus.ln_ref());
            let mut s = mp(prec, 0.0);
            let mut pw = mp(prec, 1.0);
            let mut fact = mp(prec, 1.0);
            for (k, dk) in diffs.iter().enumerate() {
                if k > 0 {
                    pw *= -Float::with_val(prec, &xm);
                    fact *= k as f64;
                }
                let tail = Float::with_val(prec, &l1x * (m - 1.0 - k as f64)).exp();
                let g = mp(prec, m - k as f64).gamma();
                s += Float::with_val(prec, dk * &pw) * tail / (Float::with_val(prec, &fact * &g));
            }
            let ly1 = mp(prec, 1.0 - y).ln();
            let lx = Float::with_val(prec, xm.ln_ref());
            let pref = (Float::with_val(prec, &lx - &ly) * (0.5 * c) - Float::with_val(prec, &l1x - &ly1) * (0.5 * c2)).exp();
            s * pref
        } else {
            let mut s = mp(prec, 0.0);
            let mut term = mp(prec, 1.0);
            for (k, dk) in diffs.iter().enumerate() {
                if k > 0 {
                    term *= -Float::with_val(prec, &xm);
                    term /= k as f64;
                }
                s += Float::with_val(prec, dk * &term);
            }
            let lx = Float::with_val(prec, xm.ln_ref());
            let pref = (Float::with_val(prec, &lx - &ly) * (0.5 * c) - (x + y) * 0.5).exp();
            s * pref
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        self.check_domain(x, y)?;
        adaptive(&self.start, |p| self.eval_prec(x, y, p))
    }

    /// Scaled kernel diagonal whose large-N limit is the global density.
    pub fn scaled_diagonal(&self, x: f64) -> Result<f64> {
        let p = &self.params;
        let n = p.n as f64;
        match p.family {
            Family::LaguerreThetaZero => {
                let t = n * x;
                self.eval(t, t)
            }
            Family::Laguerre => {
                let t = n * p.theta * x.powf(1.0 / p.theta);
                Ok(x.powf(1.0 / p.theta - 1.0) * self.eval(t, t)?)
            }
            Family::Jacobi => {
                let t = x.powf(1.0 / p.theta);
                Ok(x.powf(1.0 / p.theta - 1.0) * self.eval(t, t)? / (p.theta * n))
            }
        }
    }
}

/// Laguerre kernel (theta >= 0) by residue summation.
pub fn kernel_laguerre_series(params: &EnsembleParams, x: f64, y: f64) -> Result<f64> {
    if params.family == Family::Jacobi {
        return domain("kernel_laguerre_series needs a Laguerre family");
    }
    ResidueKernel::new(params)?.eval(x, y)
}

/// Jacobi kernel by residue summation. For non-integer `c2` the same closed
/// form is used as the analytic continuation in `c2`.
pub fn kernel_jacobi(params: &EnsembleParams, x: f64, y: f64) -> Result<f64> {
    if params.family != Family::Jacobi {
        return domain("kernel_jacobi needs the Jacobi family");
    }
    ResidueKernel::new(params)?.eval(x, y)
}

/// Dispatches on the family.
pub fn kernel(params: &EnsembleParams, x: f64, y: f64) -> Result<f64> {
    ResidueKernel::new(params)?.eval(x, y)
}

/// `x^{1/theta - 1} K(N theta x^{1/theta}, .)` for Laguerre, `K(Nx, Nx)` at
/// theta = 0, `x^{1/theta - 1} K(x^{1/theta}, .) / (theta N)` for Jacobi.
pub fn global_density_estimate(params: &EnsembleParams, x: f64) -> Result<f64> {
    ResidueKernel::new(params)?.scaled_diagonal(x)
}

/// Two-level Laguerre kernel `K(n1, x; n2, y)`, including the single
/// integral term. With the same conjugation as the one-level kernel.
pub fn kernel_two_level_laguerre(params: &EnsembleParams, n1: usize, x: f64, n2: usize, y: f64) -> Result<f64> {
    let params = params.validated()?;
    if params.family == Family::Jacobi {
        return domain("two-level kernel is implemented for Laguerre only");
    }
    let n = params.n;
    if n1 < 1 || n2 < 1 || n1 > n || n2 > n {
        return domain(format!("levels must lie in 1..={n}, got {n1}, {n2}"));
    }
    if !(x > 0.0 && y > 0.0) {
        return domain("kernel arguments must be positive");
    }
    let alpha = kernel_alpha(&params);
    let start = AtomicU32::new(START_PREC);
    adaptive(&start, |prec| two_level_prec(&alpha, params.c, n1, x, n2, y, prec))
}

fn two_level_prec(alpha: &[f64], c: f64, n1: usize, x: f64, n2: usize, y: f64, prec: u32) -> Float {
    let a: Vec<Float> = alpha[..n2].iter().map(|&v| mp(prec, v)).collect();
    let ly = mp(prec, y).ln();
    let xm = mp(prec, x);
    let lx = Float::with_val(prec, xm.ln_ref());
    // A_l = y^{alpha_l} / (Gamma(alpha_l + 1) prod_{m <= n2, m != l} (alpha_l - alpha_m))
    let coef: Vec<Float> = (0..n2)
        .map(|l| {
            let mut d = Float::with_val(prec, &a[l] + 1.0).gamma();
            for (j, aj) in a.iter().enumerate() {
                if j != l {
                    d *= Float::with_val(prec, &a[l] - aj);
                }
            }
            Float::with_val(prec, &a[l] * &ly).exp() / d
        })
        .collect();
    // C_l = prod_{j <= n1} (alpha_l - alpha_j) for l > n1
    let cl: Vec<Float> = (0..n2)
        .map(|l| {
            let mut p = mp(prec, 1.0);
            if l >= n1 {
                for aj in &a[..n1.min(n2)] {
                    p *= Float::with_val(prec, &a[l] - aj);
                }
                for &aj in &alpha[n2.min(n1)..n1] {
                    p *= Float::with_val(prec, &a[l] - aj);
                }
            }
            p
        })
        .collect();
    let a1: Vec<Float> = alpha[..n1].iter().map(|&v| mp(prec, v)).collect();
    let mut d: Vec<Float> = (0..n1)
        .map(|k| {
            let p = -(k as f64) - 1.0;
            let t: Vec<Float> = a1.iter().map(|aj| p - Float::with_val(prec, aj)).collect();
            let mut full = mp(prec, 1.0);
            for tj in &t {
                full *= tj;
            }
            let mut s = mp(prec, 0.0);
            for l in 0..n2 {
                let tl = p - Float::with_val(prec, &a[l]);
                let v = if l < n1 { Float::with_val(prec, &full / &tl) } else { Float::with_val(prec, &full - &cl[l]) / tl };
                s += v * &coef[l];
            }
            s
        })
        .collect();
    let mut series = mp(prec, 0.0);
    let mut term = mp(prec, 1.0);
    for k in 0..n1 {
        if k > 0 {
            term *= -Float::with_val(prec, &xm);
            term /= k as f64;
        }
        series += Float::with_val(prec, &d[0] * &term);
        for i in 0..(n1 - 1 - k) {
            let t = Float::with_val(prec, &d[i + 1] - &d[i]);
            d[i] = t;
        }
    }
    // sum_k (-x)^k / (k! (k + 1 + alpha_l)) = e^{-x} sum_m x^m / (1 + alpha_l)_{m+1}
    for l in n1..n2 {
        let mut t = Float::with_val(prec, (&a[l] + mp(prec, 1.0)).recip_ref());
        let mut g = t.clone();
        let mut m = 0u64;
        loop {
            m += 1;
            t *= &xm;
            t /= Float::with_val(prec, &a[l] + (1.0 + m as f64));
            g += &t;
            let small = Float::with_val(prec, &t * mp(prec, 2f64.powi(prec as i32)).to_f64()) < g;
            if m as f64 > x && small {
                break;
            }
        }
        series -= g * &coef[l] * &cl[l];
    }
    let mut total = series * Float::with_val(prec, -&xm).exp();
    if x > y && n1 < n2 {
        let mut r = mp(prec, 0.0);
        for l in n1..n2 {
            let mut den = mp(prec, 1.0);
            for m in n1..n2 {
                if m != l {
                    den *= Float::with_val(prec, &a[l] - &a[m]);
                }
            }
            let e = Float::with_val(prec, &a[l] * &ly) - Float::with_val(prec, &a[l] + 1.0) * &lx;
            r += e.exp() / den;
        }
        total += r;
    }
    let pref = (Float::with_val(prec, &lx - &ly) * (0.5 * c) + (x - y) * 0.5).exp();
    total * pref
}

/// Quadrature settings for the contour representation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub degree: usize,
    pub panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { degree: 20, panels: 4 }
    }
}

/// The `w` contour: a rectangle around all `alpha` with half-gap `g` and
/// half-height `h`.
fn gamma_alpha_contour(params: &EnsembleParams, alpha: &[f64], rule: &GlRule, panels: usize) -> (ContourSpec, f64) {
    let a1 = alpha[0];
    let an = *alpha.last().unwrap();
    let g = params.theta.min(a1 + 1.0) / 2.0;
    let h = (params.theta * params.n as f64 / 4.0).max(g);
    (closed_rectangle(rule, a1 - g, an + g, h, panels), a1 - g)
}

/// Anchor for the `z` contour, midway between `-1` and the `w` contour.
fn sigma_anchor(left: f64) -> f64 {
    0.5 * (left - 1.0)
}

/// Ray length beyond which `|f|` stays below `e^{-40}` of its maximum.
fn ray_length<F: Fn(Complex64) -> f64>(vertex: Complex64, dir: Complex64, ln_abs: F) -> f64 {
    let mut best = f64::NEG_INFINITY;
    let mut r = 0.0;
    loop {
        r += 0.5;
        let v = ln_abs(vertex + dir * r);
        best = best.max(v);
        if r > 4.0 && v < best - 40.0 {
            return r;
        }
        if r > 1e4 {
            return r;
        }
    }
}

/// Laguerre kernel (theta > 0) by direct quadrature of the double contour
/// integral. The `z` contour is a pair of rays from a point between `-1`
/// and the `w` rectangle; since the `z = w` residue integrates to zero over
/// the closed `w` contour, this gives the same value as a `z` contour
/// looping around the rectangle.
pub fn kernel_laguerre_quadrature(params: &EnsembleParams, x: f64, y: f64) -> Result<f64> {
    kernel_laguerre_quadrature_with(params, x, y, QuadOptions::default())
}

pub fn kernel_laguerre_quadrature_with(params: &EnsembleParams, x: f64, y: f64, opts: QuadOptions) -> Result<f64> {
    let params = params.validated()?;
    if params.family != Family::Laguerre || params.theta <= 0.0 {
        return domain("contour quadrature needs Laguerre with theta > 0");
    }
    if !(x > 0.0 && y > 0.0) {
        return domain("kernel arguments must be positive");
    }
    let alpha = params.alpha().values;
    if alpha[0] <= -1.0 + 1e-6 {
        return domain("alpha_1 too close to -1 to separate the contours");
    }
    let rule = GlRule::new(opts.degree);
    let (wc, left) = gamma_alpha_contour(&params, &alpha, &rule, opts.panels);
    let s0 = Complex64::new(sigma_anchor(left), 0.0);
    let (lx, ly) = (x.ln(), y.ln());
    let ln_f = |z: Complex64| -> Complex64 {
        let mut v = -(z + 1.0) * lx + ln_gamma_c(z + 1.0);
        for &a in &alpha {
            v += (z - a).ln();
        }
        v
    };
    let dir = Complex64::from_polar(1.0, 0.75 * PI);
    let len = ray_length(s0, dir, |z| ln_f(z).re);
    let h0 = (0.5 * (left - s0.re)).min(0.5) / opts.panels as f64 * 4.0;
    let zc = hankel_rays(&rule, s0, PI / 4.0, len, h0);
    Ok(double_integral(&zc, &wc, |z| ln_f(z).exp(), |w| {
        let mut v = w * ly - ln_gamma_c(w + 1.0);
        for &a in &alpha {
            v -= (w - a).ln();
        }
        v.exp()
    }) * (0.5 * params.c * (lx - ly) + 0.5 * (x - y)).exp())
}

/// `(2 pi i)^{-2} int_zc dz f(z) int_wc dw g(w) / (z - w)`, real part.
fn double_integral<F: Fn(Complex64) -> Complex64 + Sync, G: Fn(Complex64) -> Complex64>(zc: &ContourSpec, wc: &ContourSpec, f: F, g: G) -> f64 {
    let gw: Vec<(Complex64, Complex64)> = wc.nodes.iter().map(|&(w, dw)| (w, g(w) * dw)).collect();
    let total: Complex64 = zc
        .nodes
        .par_iter()
        .map(|&(z, dz)| {
            let inner: Complex64 = gw.iter().map(|&(w, gwdw)| gwdw / (z - w)).sum();
            f(z) * dz * inner
        })
        .sum();
    let two_pi_i = Complex64::new(0.0, 2.0 * PI);
    (total / (two_pi_i * two_pi_i)).re
}

/// Jacobi kernel with integer `c2` by quadrature: the `z` contour is a
/// rectangle around `-1, ..., -(c2 + N)`.
pub fn kernel_jacobi_quadrature(params: &EnsembleParams, x: f64, y: f64, opts: QuadOptions) -> Result<f64> {
    let params = params.validated()?;
    if params.family != Family::Jacobi || params.theta <= 0.0 {
        return domain("Jacobi quadrature needs the Jacobi family with theta > 0");
    }
    if params.c2 != params.c2.round() || params.c2 < 0.0 {
        return domain("Jacobi quadrature implemented for integer c2 >= 0 only");
    }
    if !(x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0) {
        return domain("kernel arguments must lie in (0, 1)");
    }
    let alpha = params.alpha().values;
    let m = params.c2 as usize + params.n;
    let rule = GlRule::new(opts.degree);
    let (wc, left) = gamma_alpha_contour(&params, &alpha, &rule, opts.panels);
    let right = sigma_anchor(left);
    let zc = closed_rectangle(&rule, -(m as f64) - 0.5, right, 0.5, opts.panels);
    let (lx, ly) = (x.ln(), y.ln());
    let k = double_integral(
        &zc,
        &wc,
        |z| {
            let mut v = (-(z + 1.0) * lx).exp();
            for &a in &alpha {
                v *= z - a;
            }
            for i in 1..=m {
                v /= z + i as f64;
            }
            v
        },
        |w| {
            let mut v = (w * ly).exp();
            for i in 1..=m {
                v *= w + i as f64;
            }
            for &a in &alpha {
                v /= w - a;
            }
            v
        },
    );
    let pref = 0.5 * params.c * (lx - ly) - 0.5 * params.c2 * ((1.0 - x).ln() - (1.0 - y).ln());
    Ok(k * pref.exp())
}

/// Kernel values on a grid, with the parameters that produced them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelGrid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// `values[i][j] = K(xs[i], ys[j])`
    pub values: Vec<Vec<f64>>,
    pub params: EnsembleParams,
    pub symmetric: bool,
}

impl KernelGrid {
    pub fn compute(params: &EnsembleParams, xs: &[f64], ys: &[f64]) -> Result<Self> {
        let k = ResidueKernel::new(params)?;
        let values = xs.par_iter().map(|&x| ys.iter().map(|&y| k.eval(x, y)).collect::<Result<Vec<_>>>()).collect::<Result<Vec<_>>>()?;
        Ok(Self { xs: xs.to_vec(), ys: ys.to_vec(), values, params: k.params, symmetric: xs == ys })
    }
}

/// `int K(x, x) dx` over the support.
pub fn kernel_trace(params: &EnsembleParams) -> Result<f64> {
    let k = ResidueKernel::new(params)?;
    let diag = |t: f64| k.eval(t, t).unwrap_or(f64::NAN);
    Ok(match params.family {
        Family::Jacobi => quad::integrate_split(diag, 0.0, 1.0, 4, 1e-13),
        _ => {
            let hi = laguerre_cutoff(&k);
            quad::integrate_split(diag, 0.0, hi, 16, 1e-13)
        }
    })
}

/// Point beyond which the Laguerre kernel diagonal is negligible.
fn laguerre_cutoff(k: &ResidueKernel) -> f64 {
    let a = k.alpha.last().copied().unwrap_or(0.0);
    let mut t = 4.0 * (a + k.params.n as f64 + 10.0);
    while k.eval(t, t).map(|v| v > 1e-17).unwrap_or(false) {
        t *= 1.5;
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::biortho::KernelOracle;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn n1_closed_forms() {
        let p = EnsembleParams::laguerre(1.0, 0.0, 1).unwrap();
        for &(x, y) in &[(0.3, 2.0), (4.0, 1.5), (7.0, 7.0)] {
            let e = (-(x + y) / 2.0f64).exp();
            assert!(rel(kernel_laguerre_series(&p, x, y).unwrap(), e) < 1e-14);
            assert!(rel(kernel_laguerre_quadrature(&p, x, y).unwrap(), e) < 1e-10);
        }
        let p = EnsembleParams::laguerre(1.0, 0.7, 1).unwrap();
        let (x, y) = (0.9f64, 2.2f64);
        let e = (x * y).powf(0.35) * (-(x + y) / 2.0).exp() / crate::special::gamma(1.7);
        assert!(rel(kernel_laguerre_series(&p, x, y).unwrap(), e) < 1e-14);
        let p = EnsembleParams::jacobi(1.0, 0.0, 0.0, 1).unwrap();
        assert!(rel(kernel_jacobi(&p, 0.2, 0.8).unwrap(), 1.0) < 1e-14);
    }

    #[test]
    fn laguerre_matches_oracle() {
        let p = EnsembleParams::laguerre(2.0, 0.5, 4).unwrap();
        let o = KernelOracle::new(&p).unwrap();
        let k = ResidueKernel::new(&p).unwrap();
        for &x in &[0.5, 3.0, 9.0] {
            for &y in &[0.8, 4.0, 12.0] {
                let (a, b) = (k.eval(x, y).unwrap(), o.eval(x, y).unwrap());
                assert!(rel(a, b) < 1e-10, "{x} {y} {a} {b}");
                let q = kernel_laguerre_quadrature(&p, x, y).unwrap();
                assert!(rel(q, b) < 1e-8, "{x} {y} {q} {b}");
            }
        }
    }

    #[test]
    fn jacobi_matches_oracle() {
        for &(theta, c1, c2) in &[(2.0, 0.0, 1.0), (1.0, 0.5, 2.0), (1.5, 0.3, 0.0)] {
            let p = EnsembleParams::jacobi(theta, c1, c2, 4).unwrap();
            let o = KernelOracle::new(&p).unwrap();
            for &x in &[0.1, 0.5, 0.9] {
                for &y in &[0.2, 0.6, 0.95] {
                    let (a, b) = (kernel_jacobi(&p, x, y).unwrap(), o.eval(x, y).unwrap());
                    assert!(rel(a, b) < 1e-10, "{x} {y} {a} {b}");
                    let q = kernel_jacobi_quadrature(&p, x, y, QuadOptions::default()).unwrap();
                    assert!(rel(q, b) < 1e-8, "{x} {y} {q} {b}");
                }
            }
        }
    }

    #[test]
    fn jacobi_fractional_c2_matches_oracle() {
        for &c2 in &[0.5, -0.4, 2.7] {
            let p = EnsembleParams::jacobi(2.0, 0.25, c2, 3).unwrap();
            let o = KernelOracle::new(&p).unwrap();
            for &(x, y) in &[(0.1, 0.7), (0.5, 0.5), (0.93, 0.3)] {
                let (a, b) = (kernel_jacobi(&p, x, y).unwrap(), o.eval(x, y).unwrap());
                assert!(rel(a, b) < 1e-10, "c2={c2} {x} {y} {a} {b}");
            }
        }
    }

    #[test]
    fn traces() {
        let p = EnsembleParams::laguerre(2.0, 0.5, 4).unwrap();
        assert!((kernel_trace(&p).unwrap() - 4.0).abs() < 1e-8);
        let p = EnsembleParams::jacobi(2.0, 0.0, 1.0, 3).unwrap();
        assert!((kernel_trace(&p).unwrap() - 3.0).abs() < 1e-8);
        let p = EnsembleParams::theta_zero(0.5, 3).unwrap();
        assert!((kernel_trace(&p).unwrap() - 3.0).abs() < 1e-6);
    }

    #[test]
    fn quadrature_node_doubling() {
        let p = EnsembleParams::laguerre(2.0, 0.0, 3).unwrap();
        let (x, y) = (1.3, 2.1);
        let exact = kernel_laguerre_series(&p, x, y).unwrap();
        let e1 = (kernel_laguerre_quadrature_with(&p, x, y, QuadOptions { degree: 6, panels: 2 }).unwrap() - exact).abs();
        let e2 = (kernel_laguerre_quadrature_with(&p, x, y, QuadOptions { degree: 6, panels: 4 }).unwrap() - exact).abs();
        assert!(e2 * 10.0 <= e1, "{e1} {e2}");
    }

    #[test]
    fn series_matches_quadrature_random_points() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let p = EnsembleParams::laguerre(2.0, 0.0, 3).unwrap();
        for _ in 0..10 {
            let x = rng.random_range(0.05..15.0);
            let y = rng.random_range(0.05..15.0);
            let a = kernel_laguerre_series(&p, x, y).unwrap();
            let b = kernel_laguerre_quadrature(&p, x, y).unwrap();
            assert!((a - b).abs() < 1e-8 * a.abs().max(1e-3), "{x} {y} {a} {b}");
        }
    }

    #[test]
    fn two_level_reduces_and_is_positive() {
        let p = EnsembleParams::laguerre(2.0, 0.5, 3).unwrap();
        let (x, y) = (1.1, 2.6);
        let a = kernel_two_level_laguerre(&p, 3, x, 3, y).unwrap();
        assert!(rel(a, kernel_laguerre_series(&p, x, y).unwrap()) < 1e-13);
        // one level is a projection kernel of the same form
        let p2 = EnsembleParams::laguerre(2.0, 0.5, 2).unwrap();
        let a = kernel_two_level_laguerre(&p, 2, x, 2, y).unwrap();
        assert!(rel(a, kernel_laguerre_series(&p2, x, y).unwrap()) < 1e-13);
    }

    #[test]
    fn two_level_joint_density() {
        // alpha = (0, 1): level-1 point mu and level-2 pair l1 > mu > l2 have
        // joint density (l1 - l2) l1 l2 e^{-l1 - l2} / mu^2
        let p = EnsembleParams::laguerre(1.0, 0.0, 2).unwrap();
        let k = |a: (usize, f64), b: (usize, f64)| kernel_two_level_laguerre(&p, a.0, a.1, b.0, b.1).unwrap();
        for &(l1, mu, l2) in &[(3.0, 1.2, 0.4), (2.0, 1.9, 0.1), (5.5, 2.0, 1.0)] {
            let pts = [(1, mu), (2, l1), (2, l2)];
            let m: Vec<Vec<f64>> = pts.iter().map(|&a| pts.iter().map(|&b| k(a, b)).collect()).collect();
            let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
            let want = (l1 - l2) * l1 * l2 * f64::exp(-l1 - l2) / (mu * mu);
            assert!(rel(det, want) < 1e-10, "{det} {want}");
        }
        // outside the interlacing region the density vanishes
        let pts = [(1, 4.0), (2, 3.0), (2, 0.5)];
        let m: Vec<Vec<f64>> = pts.iter().map(|&a| pts.iter().map(|&b| k(a, b)).collect()).collect();
        let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        assert!(det.abs() < 1e-12, "{det}");
        // first term vanishes for x < y: K(1, x; 2, y) at x < y equals the double integral alone
        assert!(k((1, 0.5), (2, 2.0)).is_finite());
    }

    #[test]
    fn determinantal_positivity() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let p = EnsembleParams::laguerre(1.5, 0.2, 4).unwrap();
        let k = ResidueKernel::new(&p).unwrap();
        for _ in 0..20 {
            let pts: Vec<f64> = (0..3).map(|_| rng.random_range(0.01..12.0)).collect();
            let m: Vec<Vec<f64>> = pts.iter().map(|&a| pts.iter().map(|&b| k.eval(a, b).unwrap()).collect()).collect();
            let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
            assert!(det >= -1e-9);
        }
    }

    #[test]
    fn projection() {
        let p = EnsembleParams::laguerre(2.0, 0.0, 3).unwrap();
        let k = ResidueKernel::new(&p).unwrap();
        let (x, y) = (0.7, 2.3);
        let kk = quad::integrate_split(|t| if t > 0.0 { k.eval(x, t).unwrap() * k.eval(t, y).unwrap() } else { 0.0 }, 0.0, 80.0, 16, 1e-14);
        assert!(rel(kk, k.eval(x, y).unwrap()) < 1e-8);
    }

    #[test]
    fn large_n_is_stable() {
        let p = EnsembleParams::laguerre(2.0, 0.0, 100).unwrap();
        let k = ResidueKernel::new(&p).unwrap();
        let v = k.scaled_diagonal(1.0).unwrap();
        let fc = crate::densities::fc_density(2.0, 1.0).unwrap();
        assert!((v - fc).abs() < 0.05, "{v} {fc}");
    }

    #[test]
    fn jacobi_theta1_density_at_half() {
        let p = EnsembleParams::jacobi(1.0, 0.0, 0.0, 100).unwrap();
        let v = global_density_estimate(&p, 0.5).unwrap();
        assert!((v - 2.0 / PI).abs() < 0.02, "{v}");
    }

    #[test]
    fn global_density_normalisation_and_trend() {
        let p = EnsembleParams::laguerre(2.0, 0.0, 50).unwrap();
        let k = ResidueKernel::new(&p).unwrap();
        let mass = quad::integrate_split(|x| if x > 0.0 { k.scaled_diagonal(x).unwrap() } else { 0.0 }, 0.0, 10.0, 8, 1e-8);
        assert!((mass - 1.0).abs() < 1e-3, "{mass}");
        let fc = crate::densities::fc_density(2.0, 1.0).unwrap();
        let err = |n: usize| (global_density_estimate(&EnsembleParams::laguerre(2.0, 0.0, n).unwrap(), 1.0).unwrap() - fc).abs();
        assert!(err(100) < err(25));
        let t0 = |n: usize| (global_density_estimate(&EnsembleParams::theta_zero(0.0, n).unwrap(), 1.0).unwrap() - crate::densities::theta0_density(1.0).unwrap()).abs();
        assert!(t0(40) < t0(10));
    }
}
