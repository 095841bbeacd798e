//! Global densities: Fuss-Catalan (Laguerre), its Jacobi analogue and the
//! `theta = 0` limit, with moments, saddle points and resolvents.

use num_bigint::BigUint;
use num_complex::Complex64;
use std::f64::consts::{E, PI};

use crate::error::{domain, Result};
use crate::quad;
use crate::special::{lambert_w, lambert_w_exp, ln_gamma, WBranch};

/// Fuss-Catalan parameter and support endpoint `L = (1 + theta)^(1 + theta) / theta^theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FcParam {
    pub theta: f64,
    pub l: f64,
}

impl FcParam {
    pub fn new(theta: f64) -> Result<Self> {
        Ok(Self { theta, l: fc_support(theta)? })
    }
}

/// Complex conjugate pair of saddle points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleRoots {
    pub u_plus: Complex64,
    pub u_minus: Complex64,
}

impl SaddleRoots {
    fn from_plus(u: Complex64) -> Self {
        Self { u_plus: u, u_minus: u.conj() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventSample {
    pub z: Complex64,
    pub value: Complex64,
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0) || !theta.is_finite() {
        return domain(format!("theta must be positive, got {theta}"));
    }
    Ok(())
}

pub fn fc_support(theta: f64) -> Result<f64> {
    check_theta(theta)?;
    Ok(((1.0 + theta) * (1.0 + theta).ln() - theta * theta.ln()).exp())
}

/// The angle `phi` together with `eps = pi/(theta+1) - phi`, each held to
/// full relative precision on its own half of the range.
#[derive(Debug, Clone, Copy)]
struct Angle {
    phi: f64,
    eps: f64,
}

impl Angle {
    /// `(sin phi, sin theta phi, sin (theta+1) phi)`.
    fn sines(&self, theta: f64) -> (f64, f64, f64) {
        let a = PI / (theta + 1.0);
        if self.phi < 0.5 * a {
            (self.phi.sin(), (theta * self.phi).sin(), ((theta + 1.0) * self.phi).sin())
        } else {
            (self.phi.sin(), (a + theta * self.eps).sin(), ((theta + 1.0) * self.eps).sin())
        }
    }

    /// `d ln x / d phi`; a series removes the cancellation at small `phi`.
    fn dlnx(&self, theta: f64) -> f64 {
        let a = PI / (theta + 1.0);
        let t1 = theta + 1.0;
        if self.phi < 0.5 * a {
            let phi = self.phi;
            if t1 * phi < 0.05 {
                const C: [f64; 4] = [1.0 / 3.0, 1.0 / 45.0, 2.0 / 945.0, 1.0 / 4725.0];
                let mut d = 0.0;
                for (k, c) in C.iter().enumerate() {
                    let e = 2 * k as i32 + 3;
                    d -= c * (t1.powi(e) - 1.0 - theta.powi(e)) * phi.powi(e - 2);
                }
                return d;
            }
            let cot = |y: f64| y.cos() / y.sin();
            t1 * t1 * cot(t1 * phi) - cot(phi) - theta * theta * cot(theta * phi)
        } else {
            let cot = |y: f64| y.cos() / y.sin();
            -t1 * t1 * cot(t1 * self.eps) - cot(self.phi) + theta * theta * cot(a + theta * self.eps)
        }
    }

    /// `ln x(phi)` for the Laguerre parametrisation.
    fn ln_x(&self, theta: f64) -> f64 {
        let (s1, st, s1t) = self.sines(theta);
        (theta + 1.0) * s1t.ln() - s1.ln() - theta * st.ln()
    }
}

fn fc_angle(theta: f64, x: f64) -> Result<Angle> {
    let l = fc_support(theta)?;
    if !(x > 0.0 && x < l) {
        return domain(format!("x = {x} outside the open support (0, {l})"));
    }
    let a = PI / (theta + 1.0);
    let lx = x.ln();
    let mid = Angle { phi: 0.5 * a, eps: 0.5 * a };
    // ln x(phi) decreases in phi; bisect on whichever of phi, eps is small
    let by_phi = lx > mid.ln_x(theta);
    let (mut lo, mut hi) = (0.0, 0.5 * a);
    let make = |t: f64| if by_phi { Angle { phi: t, eps: a - t } } else { Angle { phi: a - t, eps: t } };
    for _ in 0..200 {
        let t = 0.5 * (lo + hi);
        if t <= lo || t >= hi {
            break;
        }
        let v = make(t).ln_x(theta);
        // in phi mode x decreases with t; in eps mode x increases with t
        if (v > lx) == by_phi {
            lo = t;
        } else {
            hi = t;
        }
        if hi - lo <= 1e-16 * hi {
            break;
        }
    }
    Ok(make(0.5 * (lo + hi)))
}

/// The unique `phi` in `(0, pi/(theta+1))` with `x = x(phi)`.
pub fn fc_phi_from_x(theta: f64, x: f64) -> Result<f64> {
    Ok(fc_angle(theta, x)?.phi)
}

/// `x(phi) = sin((theta+1) phi)^(theta+1) / (sin phi sin(theta phi)^theta)`.
pub fn fc_x_from_phi(theta: f64, phi: f64) -> f64 {
    let a = PI / (theta + 1.0);
    Angle { phi, eps: a - phi }.ln_x(theta).exp()
}

/// Fuss-Catalan density; zero outside the open support.
pub fn fc_density(theta: f64, x: f64) -> Result<f64> {
    let l = fc_support(theta)?;
    if !(x > 0.0 && x < l) {
        return Ok(0.0);
    }
    let (s1, st, s1t) = fc_angle(theta, x)?.sines(theta);
    Ok(s1 * s1t / (PI * x * st))
}

/// Fuss-Catalan number `binom((theta+1) k, k) / (theta k + 1)`.
pub fn fc_moment(theta: f64, k: u32) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let k = k as f64;
    (ln_gamma((theta + 1.0) * k + 1.0) - ln_gamma(k + 1.0) - ln_gamma(theta * k + 1.0)).exp() / (theta * k + 1.0)
}

/// Exact Fuss-Catalan number for integer `theta`.
pub fn fc_moment_exact(theta: u64, k: u64) -> BigUint {
    // binom((theta+1)k, k) / (theta k + 1)
    let n = (theta + 1) * k;
    let mut b = BigUint::from(1u32);
    for i in 0..k {
        b = b * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    b / BigUint::from(theta * k + 1)
}

/// Density of the Jacobi analogue on `(0, 1)`; zero outside.
pub fn jfc_density(theta: f64, x: f64) -> Result<f64> {
    check_theta(theta)?;
    if !(x > 0.0 && x < 1.0) {
        return Ok(0.0);
    }
    let u = saddle_roots_jacobi(theta, x)?.u_plus;
    Ok(u.im / (PI * x))
}

/// Moments `binom((1+theta) p, p) / L^p` of the Jacobi density.
pub fn jfc_moment(theta: f64, p: u32) -> Result<f64> {
    let l = fc_support(theta)?;
    if p == 0 {
        return Ok(1.0);
    }
    let p = p as f64;
    Ok((ln_gamma((1.0 + theta) * p + 1.0) - ln_gamma(p + 1.0) - ln_gamma(theta * p + 1.0) - p * l.ln()).exp())
}

/// Roots of `u^(theta+1) = (u - 1) x` for `x` in the support.
pub fn saddle_roots_laguerre(theta: f64, x: f64) -> Result<SaddleRoots> {
    let l = fc_support(theta)?;
    if !(x > 0.0 && x < l) {
        return domain(format!("x = {x} outside (0, {l}): saddle points are real"));
    }
    let ang = fc_angle(theta, x)?;
    let (_, st, s1t) = ang.sines(theta);
    Ok(SaddleRoots::from_plus(Complex64::from_polar(s1t / st, ang.phi)))
}

/// Roots of `u^(theta+1) = x (1/theta + u)^theta (u - 1)` for `x` in `(0, 1)`.
pub fn saddle_roots_jacobi(theta: f64, x: f64) -> Result<SaddleRoots> {
    check_theta(theta)?;
    if !(x > 0.0 && x < 1.0) {
        return domain(format!("x = {x} outside (0, 1): saddle points are real"));
    }
    let l = fc_support(theta)?;
    let ang = fc_angle(theta, x * l)?;
    let (_, st, s1t) = ang.sines(theta);
    let v = Complex64::from_polar(theta * s1t / ((1.0 + theta) * st), ang.phi);
    Ok(SaddleRoots::from_plus(v / (theta * (1.0 - v))))
}

/// `int_a^b f` after `x = a + (b - a) sin^2 t`, which removes square-root
/// singularities at both ends of a support.
pub fn integrate_support<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, pieces: usize) -> f64 {
    let w = b - a;
    let g = |t: f64| {
        let (s, c) = t.sin_cos();
        let x = if t < 0.25 * PI { a + w * s * s } else { b - w * c * c };
        f(x) * 2.0 * w * s * c
    };
    quad::integrate_split(g, 0.0, 0.5 * PI, pieces, 1e-14)
}

/// `int_0^a g(angle) dphi` split at `a/2`, each half parametrised by its
/// distance to the nearer end.
fn integrate_angle<F: Fn(Angle) -> f64>(theta: f64, g: F) -> f64 {
    let a = PI / (theta + 1.0);
    let lower = quad::integrate_split(|t| g(Angle { phi: t, eps: a - t }), 0.0, 0.5 * a, 4, 1e-14);
    let upper = quad::integrate_split(|t| g(Angle { phi: a - t, eps: t }), 0.0, 0.5 * a, 4, 1e-14);
    lower + upper
}

/// `int f(x) rho(x) dx` for the Fuss-Catalan density, computed in the
/// angle variable where the integrand is bounded.
pub fn fc_integrate<F: Fn(f64) -> f64>(theta: f64, f: F) -> Result<f64> {
    check_theta(theta)?;
    Ok(integrate_angle(theta, |ang| {
        let (s1, st, s1t) = ang.sines(theta);
        f(ang.ln_x(theta).exp()) * s1 * s1t / (PI * st) * ang.dlnx(theta).abs()
    }))
}

/// `int f(x) rho(x) dx` for the Jacobi density.
pub fn jfc_integrate<F: Fn(f64) -> f64>(theta: f64, f: F) -> Result<f64> {
    let ln_l = fc_support(theta)?.ln();
    Ok(integrate_angle(theta, |ang| {
        let (_, st, s1t) = ang.sines(theta);
        let v = Complex64::from_polar(theta * s1t / ((1.0 + theta) * st), ang.phi);
        let u = v / (theta * (1.0 - v));
        f((ang.ln_x(theta) - ln_l).exp()) * u.im / PI * ang.dlnx(theta).abs()
    }))
}

/// Stieltjes transform `int rho(x) / (z - x) dx` over `support`.
pub fn resolvent_from_density<F: Fn(f64) -> f64>(density: F, support: (f64, f64), z: Complex64) -> Result<ResolventSample> {
    let (a, b) = support;
    if z.im == 0.0 && z.re >= a && z.re <= b {
        return domain(format!("z = {z} lies on the support"));
    }
    let pieces = 16;
    let re = integrate_support(|x| (density(x) / (z - x)).re, a, b, pieces);
    let im = integrate_support(|x| (density(x) / (z - x)).im, a, b, pieces);
    Ok(ResolventSample { z, value: Complex64::new(re, im) })
}

/// Resolvent of the Fuss-Catalan density by quadrature.
pub fn fc_resolvent(theta: f64, z: Complex64) -> Result<Complex64> {
    let l = fc_support(theta)?;
    if z.im == 0.0 && (0.0..=l).contains(&z.re) {
        return domain(format!("z = {z} lies on the support"));
    }
    let re = fc_integrate(theta, |x| (1.0 / (z - x)).re)?;
    let im = fc_integrate(theta, |x| (1.0 / (z - x)).im)?;
    Ok(Complex64::new(re, im))
}

/// Resolvent of the Jacobi density by quadrature.
pub fn jfc_resolvent(theta: f64, z: Complex64) -> Result<Complex64> {
    check_theta(theta)?;
    if z.im == 0.0 && (0.0..=1.0).contains(&z.re) {
        return domain(format!("z = {z} lies on the support"));
    }
    let re = jfc_integrate(theta, |x| (1.0 / (z - x)).re)?;
    let im = jfc_integrate(theta, |x| (1.0 / (z - x)).im)?;
    Ok(Complex64::new(re, im))
}

/// `z (zG - 1) - (zG)^(theta+1)`.
pub fn resolvent_residual_laguerre(theta: f64, z: Complex64) -> Result<Complex64> {
    let w = z * fc_resolvent(theta, z)?;
    Ok(z * (w - 1.0) - w.powf(theta + 1.0))
}

/// `z (zG - 1) (zG + 1/theta)^theta - (zG)^(theta+1)`.
pub fn resolvent_residual_jacobi(theta: f64, z: Complex64) -> Result<Complex64> {
    let w = z * jfc_resolvent(theta, z)?;
    Ok(z * (w - 1.0) * (w + 1.0 / theta).powf(theta) - w.powf(theta + 1.0))
}

/// Limit of the Jacobi resolvent as `theta -> infinity`.
pub fn jfc_resolvent_theta_inf(z: Complex64) -> Result<Complex64> {
    if z.im == 0.0 && (0.0..=1.0).contains(&z.re) {
        return domain(format!("z = {z} lies on [0, 1]"));
    }
    let w = lambert_w(-1.0 / (z * E), WBranch::Principal)?;
    Ok(1.0 / (z * (1.0 + w)))
}

/// Saddle point `u_+ = -1 / W(-1/x)` of the `theta = 0` ensemble.
pub fn saddle_root_theta0(x: f64) -> Result<SaddleRoots> {
    if !(x > 0.0) {
        return domain(format!("x must be positive, got {x}"));
    }
    let w = lambert_w(Complex64::new(-1.0 / x, 0.0), WBranch::AboveCut)?;
    Ok(SaddleRoots::from_plus(-1.0 / w))
}

/// Global density of the `theta = 0` ensemble; zero for `x >= e`.
pub fn theta0_density(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return domain(format!("x must be positive, got {x}"));
    }
    if x >= E {
        return Ok(0.0);
    }
    Ok(theta0_x_density(-x.ln())? / x)
}

/// `x rho(x)` at `x = e^{-s}`, finite for all `s > -1`.
pub fn theta0_x_density(s: f64) -> Result<f64> {
    if s <= -1.0 {
        return Ok(0.0);
    }
    let w = lambert_w_exp(Complex64::new(s, PI))?;
    Ok((-(1.0 / (PI * w)).im).max(0.0))
}

/// `int_0^e f(x) rho(x) dx` for the `theta = 0` density. Below `x = 1/2`
/// the substitution `x = exp(-1/v)` absorbs the `1/(x log^2 x)` tail.
pub fn theta0_integrate<F: Fn(f64) -> f64>(f: F) -> Result<f64> {
    let x0 = 0.5f64;
    let v0 = 1.0 / (-x0.ln());
    let head = quad::integrate_split(
        |v: f64| {
            let s = 1.0 / v;
            f((-s).exp()) * theta0_x_density(s).unwrap_or(0.0) / (v * v)
        },
        0.0,
        v0,
        4,
        1e-14,
    );
    let tail = integrate_support(|x| f(x) * theta0_density(x).unwrap_or(0.0), x0, E, 4);
    Ok(head + tail)
}

/// Moments `p^p / (p+1)!` of the `theta = 0` density.
pub fn theta0_moment(p: u32) -> f64 {
    if p == 0 {
        return 1.0;
    }
    let p = p as f64;
    (p * p.ln() - ln_gamma(p + 2.0)).exp()
}

/// Small-`x` asymptote `sin(pi/(theta+1)) / (pi theta^(theta/(theta+1))) x^(-theta/(theta+1))`.
pub fn fc_small_x(theta: f64, x: f64) -> Result<f64> {
    check_theta(theta)?;
    let e = theta / (theta + 1.0);
    Ok((PI / (theta + 1.0)).sin() / (PI * theta.powf(e)) * x.powf(-e))
}
