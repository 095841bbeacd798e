//! Samplers: upper-triangular matrices, masked Gaussian matrices, the
//! Householder reduction between them, and the interlacing corner chain.

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::eigensolve::{gram_spectrum, ComplexMatrix};
use crate::error::{domain, MbError, Result};
use crate::params::{AlphaSequence, BetaSequence, EnsembleParams, Family, Spectrum};

/// Reproducible random stream: ChaCha20 keyed by `seed`, stream `id`.
#[derive(Debug, Clone)]
pub struct RngStream {
    pub seed: u64,
    pub id: u64,
    rng: ChaCha20Rng,
}

impl RngStream {
    pub fn new(seed: u64, id: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(id);
        Self { seed, id, rng }
    }

    /// Standard complex Gaussian, `E|z|^2 = 1`.
    pub fn complex_normal(&mut self) -> Complex64 {
        let re: f64 = StandardNormal.sample(&mut self.rng);
        let im: f64 = StandardNormal.sample(&mut self.rng);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }

    pub fn exp1(&mut self) -> f64 {
        Exp1.sample(&mut self.rng)
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Draw from `Gamma[shape, 1]`.
pub fn sample_gamma(shape: f64, rng: &mut RngStream) -> Result<f64> {
    if !(shape > 0.0) || !shape.is_finite() {
        return domain(format!("gamma shape must be positive, got {shape}"));
    }
    let g = Gamma::new(shape, 1.0).map_err(|e| MbError::Domain(e.to_string()))?;
    Ok(g.sample(rng))
}

/// Shifts exponents lying within `1e-8` of an earlier one by multiples of
/// `1e-6`. Returns the new values and whether anything moved.
pub fn separate_coincident(values: &[f64]) -> (Vec<f64>, bool) {
    let mut out: Vec<f64> = Vec::with_capacity(values.len());
    let mut moved = false;
    for &v in values {
        let mut w = v;
        let mut k: usize = 0;
        while out.iter().any(|&u| (u - w).abs() < 5e-7) {
            k += 1;
            let step = k.div_ceil(2) as f64 * 1e-6;
            w = if k % 2 == 1 { v + step } else { v - step };
            moved = true;
        }
        out.push(w);
    }
    if moved {
        log::warn!("coincident exponents separated by 1e-6 perturbation");
    }
    (out, moved)
}

/// Upper-triangular matrix with real nonnegative diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct UpperTriangular {
    pub matrix: ComplexMatrix,
}

impl UpperTriangular {
    pub fn n(&self) -> usize {
        self.matrix.rows
    }

    /// Leading `n x n` block; its Gram matrix is that of the first `n` columns.
    pub fn leading(&self, n: usize) -> ComplexMatrix {
        self.matrix.block(n, n)
    }
}

fn upper_triangular(diag_shapes: &[f64], rng: &mut RngStream) -> Result<UpperTriangular> {
    let n = diag_shapes.len();
    let mut m = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        for j in 0..k {
            m[(j, k)] = rng.complex_normal();
        }
        m[(k, k)] = Complex64::new(sample_gamma(diag_shapes[k], rng)?.sqrt(), 0.0);
    }
    Ok(UpperTriangular { matrix: m })
}

/// Upper-triangular ensemble with `|y_kk|^2 ~ Gamma[alpha_k + 1, 1]`.
pub fn sample_y(alpha: &AlphaSequence, rng: &mut RngStream) -> Result<UpperTriangular> {
    if let Some(a) = alpha.values.iter().find(|&&a| !(a > -1.0)) {
        return domain(format!("alpha must be > -1, got {a}"));
    }
    let shapes: Vec<f64> = alpha.values.iter().map(|a| a + 1.0).collect();
    upper_triangular(&shapes, rng)
}

/// Upper-triangular ensemble with `|z_kk|^2 ~ Gamma[beta_k + 1, 1]`.
pub fn sample_z(beta: &BetaSequence, rng: &mut RngStream) -> Result<UpperTriangular> {
    if let Some(b) = beta.values.iter().find(|&&b| !(b > -1.0)) {
        return domain(format!("beta must be > -1, got {b}"));
    }
    let shapes: Vec<f64> = beta.values.iter().map(|b| b + 1.0).collect();
    upper_triangular(&shapes, rng)
}

/// Zero pattern of an `M x N` Gaussian matrix: column `k` (1-based) is
/// nonzero in rows `1..=k + alpha_k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaussianMask {
    pub rows: usize,
    pub cols: usize,
    pub alpha: Vec<usize>,
}

impl GaussianMask {
    pub fn new(rows: usize, alpha: Vec<usize>) -> Result<Self> {
        let cols = alpha.len();
        if cols == 0 {
            return domain("mask needs at least one column");
        }
        let bounds: Vec<usize> = alpha.iter().enumerate().map(|(k, a)| k + 1 + a).collect();
        if bounds.windows(2).any(|w| w[0] > w[1]) {
            return domain(format!("row bounds {bounds:?} are not nondecreasing"));
        }
        if bounds[cols - 1] > rows {
            return domain(format!("last row bound {} exceeds M = {rows}", bounds[cols - 1]));
        }
        Ok(Self { rows, cols, alpha })
    }

    /// Mask for integer `theta` and `c`, with the smallest admissible `M`.
    pub fn for_params(theta: usize, c: usize, n: usize) -> Result<Self> {
        let alpha: Vec<usize> = (0..n).map(|j| theta * j + c).collect();
        let rows = n + alpha[n - 1];
        Self::new(rows, alpha)
    }

    /// Whether 0-based entry `(j, k)` may be nonzero.
    pub fn allowed(&self, j: usize, k: usize) -> bool {
        j <= k + self.alpha[k]
    }
}

/// Gaussian matrix with the mask's zero pattern.
pub fn sample_x(mask: &GaussianMask, rng: &mut RngStream) -> ComplexMatrix {
    let mut x = ComplexMatrix::zeros(mask.rows, mask.cols);
    for k in 0..mask.cols {
        for j in 0..mask.rows {
            if mask.allowed(j, k) {
                x[(j, k)] = rng.complex_normal();
            }
        }
    }
    x
}

/// Left Householder reflections column by column; returns the top `N x N`
/// block. Each reflection is followed by a unit phase on the pivot row so
/// the diagonal is real and nonnegative.
pub fn householder_reduce(x: &ComplexMatrix) -> Result<UpperTriangular> {
    let (m, n) = (x.rows, x.cols);
    if m < n {
        return domain(format!("householder_reduce needs M >= N, got {m}x{n}"));
    }
    let mut a = x.clone();
    let zero = Complex64::new(0.0, 0.0);
    for k in 0..n {
        let tail: f64 = ((k + 1)..m).map(|j| a[(j, k)].norm_sqr()).sum();
        if tail > 0.0 {
            let x0 = a[(k, k)];
            let alpha = (tail + x0.norm_sqr()).sqrt();
            let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { Complex64::new(1.0, 0.0) };
            // u = x + phase |x| e1 avoids cancellation; H x = -phase |x| e1
            let mut u: Vec<Complex64> = (k..m).map(|j| a[(j, k)]).collect();
            u[0] += phase * alpha;
            let un2: f64 = u.iter().map(|z| z.norm_sqr()).sum();
            for col in k..n {
                let dot: Complex64 = u.iter().enumerate().map(|(i, ui)| ui.conj() * a[(k + i, col)]).sum();
                let f = dot * (2.0 / un2);
                for (i, ui) in u.iter().enumerate() {
                    a[(k + i, col)] -= ui * f;
                }
            }
            for j in (k + 1)..m {
                a[(j, k)] = zero;
            }
        }
        let d = a[(k, k)];
        if d.norm() > 0.0 {
            let p = d.conj() / d.norm();
            for col in k..n {
                a[(k, col)] *= p;
            }
            a[(k, k)] = Complex64::new(d.norm(), 0.0);
        }
    }
    Ok(UpperTriangular { matrix: a.block(n, n) })
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    // f increasing with f(lo) < 0 < f(hi)
    for _ in 0..2200 {
        let mid = if lo > 0.0 && hi > 4.0 * lo { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        if mid <= lo || mid >= hi || hi - lo <= 1e-15 * hi.abs() {
            break;
        }
        let v = f(mid);
        if v.is_nan() {
            break;
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn check_previous(mu: &Spectrum, upper: Option<f64>) -> Result<()> {
    if mu.values.windows(2).any(|w| w[0] < w[1]) {
        return domain("previous level is not descending");
    }
    if mu.values.iter().any(|&v| !(v > 0.0)) {
        return domain("previous level must be positive");
    }
    if let Some(u) = upper {
        if mu.values.iter().any(|&v| v >= u) {
            return domain("previous level must lie below 1");
        }
    }
    Ok(())
}

/// Brackets `(mu_{k+1}, mu_k)` between consecutive poles, with `0` below the
/// smallest pole.
fn roots_between_poles<F: Fn(f64) -> f64>(f: &F, poles: &[f64], top: f64) -> Vec<f64> {
    let n = poles.len() + 1;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let hi = if i == 0 { top } else { poles[i - 1] };
        let lo = if i == n - 1 { 0.0 } else { poles[i] };
        out.push(if hi <= lo { lo } else { bisect(f, lo, hi) });
    }
    out
}

/// One step of the Laguerre corner chain: the roots of
/// `1 - s/l + sum r_k / (mu_k - l)` with `s ~ Gamma[alpha_n + 1, 1]`,
/// `r_k ~ Exp(1)`.
pub fn corner_step_laguerre(mu: &Spectrum, alpha_n: f64, rng: &mut RngStream) -> Result<Spectrum> {
    check_previous(mu, None)?;
    if !(alpha_n > -1.0) {
        return domain(format!("alpha_n must be > -1, got {alpha_n}"));
    }
    let r: Vec<f64> = mu.values.iter().map(|_| rng.exp1()).collect();
    let s = sample_gamma(alpha_n + 1.0, rng)?;
    let poles = &mu.values;
    let f = |l: f64| {
        let mut v = 1.0 - s / l;
        for (m, rk) in poles.iter().zip(&r) {
            v += rk / (m - l);
        }
        v
    };
    let top = poles.first().copied().unwrap_or(0.0) + s + r.iter().sum::<f64>();
    Ok(Spectrum { values: roots_between_poles(&f, poles, top) })
}

/// One step of the Jacobi corner chain, solved in the variable
/// `t = l / (1 - l)` and mapped back.
pub fn corner_step_jacobi(mu: &Spectrum, alpha_n: f64, beta_n: f64, rng: &mut RngStream) -> Result<Spectrum> {
    check_previous(mu, Some(1.0))?;
    if !(alpha_n > -1.0) || !(beta_n > -1.0) {
        return domain(format!("alpha_n, beta_n must be > -1, got {alpha_n}, {beta_n}"));
    }
    let mt: Vec<f64> = mu.values.iter().map(|m| m / (1.0 - m)).collect();
    let w2: Vec<f64> = mt.iter().map(|m| (1.0 + m) * rng.exp1()).collect();
    let eta2 = sample_gamma(alpha_n + 1.0, rng)?;
    let zeta2 = sample_gamma(beta_n + 1.0, rng)?;
    let a = eta2 / zeta2;
    let b: Vec<f64> = w2.iter().map(|w| w / zeta2).collect();
    let f = |t: f64| {
        let mut v = t - a;
        for (m, bk) in mt.iter().zip(&b) {
            v += bk * t / (m - t);
        }
        v
    };
    let mut top = mt.first().copied().unwrap_or(0.0) * 2.0 + a + 1.0;
    while f(top) < 0.0 {
        top *= 2.0;
        if !top.is_finite() {
            return Err(MbError::Convergence("jacobi corner step: no upper bracket".into()));
        }
    }
    let roots = roots_between_poles(&f, &mt, top);
    Ok(Spectrum { values: roots.iter().map(|t| t / (1.0 + t)).collect() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMethod {
    Matrix,
    Corner,
}

impl std::str::FromStr for SampleMethod {
    type Err = MbError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "matrix" => Ok(SampleMethod::Matrix),
            "corner" => Ok(SampleMethod::Corner),
            other => domain(format!("unknown method '{other}'")),
        }
    }
}

/// All levels `n = 1..N` of the corner chain.
pub fn corner_chain(params: &EnsembleParams, rng: &mut RngStream) -> Result<Vec<Spectrum>> {
    let params = params.validated()?;
    let alpha = params.alpha();
    let beta = params.beta();
    let mut levels: Vec<Spectrum> = Vec::with_capacity(params.n);
    let mut mu = Spectrum { values: Vec::new() };
    for k in 0..params.n {
        mu = match params.family {
            Family::Jacobi => corner_step_jacobi(&mu, alpha.values[k], beta.values[k], rng)?,
            _ => corner_step_laguerre(&mu, alpha.values[k], rng)?,
        };
        levels.push(mu.clone());
    }
    Ok(levels)
}

/// `Y Z^{-1}` for upper-triangular `Y`, `Z` by column back-substitution.
fn right_divide(y: &ComplexMatrix, z: &ComplexMatrix) -> ComplexMatrix {
    let n = y.rows;
    let mut m = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        for i in 0..n {
            let mut s = y[(i, k)];
            for j in 0..k {
                s -= m[(i, j)] * z[(j, k)];
            }
            m[(i, k)] = s / z[(k, k)];
        }
    }
    m
}

/// One draw of the `N` eigenvalues.
pub fn sample_spectrum(params: &EnsembleParams, method: SampleMethod, rng: &mut RngStream) -> Result<Spectrum> {
    let params = params.validated()?;
    match method {
        SampleMethod::Corner => Ok(corner_chain(&params, rng)?.pop().expect("n >= 1")),
        SampleMethod::Matrix => {
            let y = sample_y(&params.alpha(), rng)?;
            match params.family {
                Family::Jacobi => {
                    let z = sample_z(&params.beta(), rng)?;
                    let m = right_divide(&y.matrix, &z.matrix);
                    let mu = gram_spectrum(&m)?;
                    Ok(Spectrum { values: mu.values.iter().map(|v| v / (1.0 + v)).collect() })
                }
                _ => gram_spectrum(&y.matrix),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        (m, xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
    }

    #[test]
    fn gamma_moments() {
        let mut rng = RngStream::new(1, 0);
        let xs: Vec<f64> = (0..100_000).map(|_| sample_gamma(1.0, &mut rng).unwrap()).collect();
        assert!((mean_var(&xs).0 - 1.0).abs() < 0.02);
        let xs: Vec<f64> = (0..100_000).map(|_| sample_gamma(2.5, &mut rng).unwrap()).collect();
        let (m, v) = mean_var(&xs);
        assert!((m - 2.5).abs() < 0.03 && (v - 2.5).abs() < 0.1, "{m} {v}");
        let xs: Vec<f64> = (0..100_000).map(|_| sample_gamma(0.3, &mut rng).unwrap()).collect();
        assert!((mean_var(&xs).0 - 0.3).abs() < 0.01);
        assert!(sample_gamma(0.0, &mut rng).is_err());
        assert!(sample_gamma(-1.0, &mut rng).is_err());
    }

    #[test]
    fn streams_reproduce_and_differ() {
        let a = sample_gamma(1.0, &mut RngStream::new(7, 0)).unwrap();
        let b = sample_gamma(1.0, &mut RngStream::new(7, 0)).unwrap();
        let c = sample_gamma(1.0, &mut RngStream::new(7, 1)).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert_ne!(a, c);
        let p = EnsembleParams::laguerre(1.5, 0.5, 6).unwrap();
        let s1 = sample_spectrum(&p, SampleMethod::Corner, &mut RngStream::new(3, 9)).unwrap();
        let s2 = sample_spectrum(&p, SampleMethod::Corner, &mut RngStream::new(3, 9)).unwrap();
        assert_eq!(s1, s2);
    }

    #[test]
    fn y_moments() {
        let mut rng = RngStream::new(2, 0);
        let a1 = AlphaSequence { values: vec![0.0] };
        let xs: Vec<f64> = (0..100_000).map(|_| sample_y(&a1, &mut rng).unwrap().matrix[(0, 0)].norm_sqr()).collect();
        assert!((mean_var(&xs).0 - 1.0).abs() < 0.02);
        let a2 = AlphaSequence { values: vec![0.0, 1.0] };
        let xs: Vec<f64> = (0..100_000).map(|_| sample_y(&a2, &mut rng).unwrap().matrix[(0, 1)].norm_sqr()).collect();
        assert!((mean_var(&xs).0 - 1.0).abs() < 0.02);
        // E tr(Y^dagger Y) = sum (alpha_k + 1) + number of strict upper entries
        let a4 = AlphaSequence { values: vec![0.0, 1.0, 2.0, 3.0] };
        let xs: Vec<f64> = (0..10_000).map(|_| sample_y(&a4, &mut rng).unwrap().matrix.frobenius().powi(2)).collect();
        assert!((mean_var(&xs).0 / 16.0 - 1.0).abs() < 0.01);
        assert!(sample_y(&AlphaSequence { values: vec![-1.0] }, &mut rng).is_err());
    }

    #[test]
    fn mask_pattern() {
        let mut rng = RngStream::new(4, 0);
        let m = GaussianMask::new(1, vec![0]).unwrap();
        assert_eq!((m.rows, m.cols), (1, 1));
        assert!(sample_x(&m, &mut rng)[(0, 0)].norm() > 0.0);
        // alpha = (0, 1, 2): column k has 2k - 1 nonzero rows, so M >= 5
        assert!(GaussianMask::new(3, vec![0, 1, 2]).is_err());
        let m = GaussianMask::new(5, vec![0, 1, 2]).unwrap();
        let x = sample_x(&m, &mut rng);
        let counts: Vec<usize> = (0..3).map(|k| (0..5).filter(|&j| x[(j, k)].norm() > 0.0).count()).collect();
        assert_eq!(counts, vec![1, 3, 5]);
        for k in 0..3 {
            for j in 0..5 {
                assert_eq!(m.allowed(j, k), j <= 2 * k);
                if !m.allowed(j, k) {
                    assert_eq!(x[(j, k)], Complex64::new(0.0, 0.0));
                }
            }
        }
        assert!(GaussianMask::new(4, vec![2, 0]).is_err());
        assert_eq!(GaussianMask::for_params(1, 0, 4).unwrap().rows, 7);
    }

    #[test]
    fn householder_keeps_triangular_input() {
        let mut rng = RngStream::new(5, 0);
        let y = sample_y(&AlphaSequence { values: vec![0.0, 1.0, 2.0] }, &mut rng).unwrap();
        let r = householder_reduce(&y.matrix).unwrap();
        for (a, b) in r.matrix.data.iter().zip(&y.matrix.data) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn householder_zero_column() {
        let mut x = ComplexMatrix::zeros(3, 2);
        x[(0, 1)] = Complex64::new(0.0, 2.0);
        x[(2, 1)] = Complex64::new(1.0, 0.0);
        let r = householder_reduce(&x).unwrap();
        assert_eq!(r.matrix[(0, 0)], Complex64::new(0.0, 0.0));
        assert!((r.matrix[(1, 1)].re - 0.0).abs() < 1e-15 || r.matrix[(1, 1)].im == 0.0);
        let g = r.matrix.gram();
        assert!((g[(1, 1)].re - 5.0).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn householder_gram_invariance(seed in 0u64..1000, m in 3usize..8, n in 1usize..4) {
            prop_assume!(m >= n);
            let mut rng = RngStream::new(seed, 0);
            let x = ComplexMatrix::from_fn(m, n, |_, _| rng.complex_normal());
            let r = householder_reduce(&x).unwrap();
            let scale = x.frobenius().powi(2);
            for k in 0..n {
                prop_assert!(r.matrix[(k, k)].im == 0.0 && r.matrix[(k, k)].re >= 0.0);
                for j in (k + 1)..n {
                    prop_assert!(r.matrix[(j, k)].norm() == 0.0);
                }
            }
            for nn in 1..=n {
                let gx = x.block(m, nn).gram();
                let gr = r.matrix.block(n, nn).gram();
                let d: f64 = gx.data.iter().zip(&gr.data).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
                prop_assert!(d < 1e-12 * scale);
            }
        }

        #[test]
        fn laguerre_step_interlaces(seed in 0u64..10_000, n in 1usize..9, alpha in -0.9f64..5.0) {
            let mut rng = RngStream::new(seed, 1);
            let mu = Spectrum::from_unsorted((0..n).map(|_| sample_gamma(1.5, &mut rng).unwrap() * 3.0 + 1e-3).collect()).unwrap();
            let l = corner_step_laguerre(&mu, alpha, &mut rng).unwrap();
            prop_assert_eq!(l.len(), n + 1);
            prop_assert!(l.values[n] > 0.0);
            for k in 0..n {
                prop_assert!(l.values[k] >= mu.values[k] && mu.values[k] >= l.values[k + 1]);
            }
        }

        #[test]
        fn jacobi_step_interlaces(seed in 0u64..10_000, n in 1usize..9, alpha in -0.9f64..5.0, beta in -0.9f64..5.0) {
            let mut rng = RngStream::new(seed, 2);
            let mu = Spectrum::from_unsorted((0..n).map(|_| rng.uniform() * 0.98 + 0.01).collect()).unwrap();
            let l = corner_step_jacobi(&mu, alpha, beta, &mut rng).unwrap();
            prop_assert_eq!(l.len(), n + 1);
            prop_assert!(l.values[0] <= 1.0 && l.values[n] > 0.0);
            for k in 0..n {
                prop_assert!(l.values[k] >= mu.values[k] && mu.values[k] >= l.values[k + 1]);
            }
        }

        #[test]
        fn laguerre_roots_solve_secular_equation(seed in 0u64..10_000) {
            // residual check via a reconstructed draw with the same stream
            let mut rng = RngStream::new(seed, 3);
            let mu = Spectrum { values: vec![4.0, 2.5, 0.5] };
            let l = corner_step_laguerre(&mu, 0.7, &mut rng).unwrap();
            let mut rng2 = RngStream::new(seed, 3);
            let r: Vec<f64> = (0..3).map(|_| rng2.exp1()).collect();
            let s = sample_gamma(1.7, &mut rng2).unwrap();
            for &x in &l.values {
                let g = 1.0 - s / x + mu.values.iter().zip(&r).map(|(m, rk)| rk / (m - x)).sum::<f64>();
                let dg = s / (x * x) + mu.values.iter().zip(&r).map(|(m, rk)| rk / (m - x).powi(2)).sum::<f64>();
                prop_assert!((g / dg).abs() <= 1e-12 * x.max(1e-300));
            }
        }
    }

    #[test]
    fn first_steps_are_classical() {
        let mut rng = RngStream::new(6, 0);
        let empty = Spectrum { values: vec![] };
        let xs: Vec<f64> = (0..50_000).map(|_| corner_step_laguerre(&empty, 1.5, &mut rng).unwrap().values[0]).collect();
        let (m, v) = mean_var(&xs);
        assert!((m - 2.5).abs() < 0.04 && (v - 2.5).abs() < 0.12);
        // Beta(a + 1, b + 1) with a = 1, b = 2: mean 2/5, variance 2*3/(25*6)
        let xs: Vec<f64> = (0..50_000).map(|_| corner_step_jacobi(&empty, 1.0, 2.0, &mut rng).unwrap().values[0]).collect();
        let (m, v) = mean_var(&xs);
        assert!((m - 0.4).abs() < 0.005 && (v - 0.04).abs() < 0.002, "{m} {v}");
    }

    #[test]
    fn spectrum_n1_is_gamma() {
        let mut rng = RngStream::new(8, 0);
        for p in [EnsembleParams::laguerre(2.0, 0.5, 1).unwrap(), EnsembleParams::theta_zero(0.5, 1).unwrap()] {
            for method in [SampleMethod::Matrix, SampleMethod::Corner] {
                let xs: Vec<f64> = (0..40_000).map(|_| sample_spectrum(&p, method, &mut rng).unwrap().values[0]).collect();
                assert!((mean_var(&xs).0 - 1.5).abs() < 0.03);
            }
        }
    }

    #[test]
    fn jacobi_matrix_n1_is_beta() {
        let mut rng = RngStream::new(9, 0);
        let p = EnsembleParams::jacobi(1.0, 1.0, 1.0, 1).unwrap();
        let xs: Vec<f64> = (0..40_000).map(|_| sample_spectrum(&p, SampleMethod::Matrix, &mut rng).unwrap().values[0]).collect();
        let (m, v) = mean_var(&xs);
        assert!((m - 0.5).abs() < 0.005 && (v - 0.05).abs() < 0.002);
    }

    #[test]
    fn coincident_exponents_are_separated() {
        let (v, moved) = separate_coincident(&[0.5, 0.5, 0.5, 1.0]);
        assert!(moved);
        for i in 0..4 {
            for j in 0..i {
                assert!((v[i] - v[j]).abs() >= 5e-7);
            }
        }
        assert!(v.iter().zip([0.5, 0.5, 0.5, 1.0]).all(|(a, b)| (a - b).abs() <= 1e-6 + 1e-15));
        assert_eq!(separate_coincident(&[0.0, 1.0]), (vec![0.0, 1.0], false));
    }

    #[test]
    fn right_divide_inverts() {
        let mut rng = RngStream::new(10, 0);
        let y = sample_y(&AlphaSequence { values: vec![0.0, 1.0, 2.0] }, &mut rng).unwrap().matrix;
        let z = sample_z(&BetaSequence { values: vec![2.0, 1.0, 0.0], base: 0.0 }, &mut rng).unwrap().matrix;
        let back = right_divide(&y, &z).matmul(&z);
        for (a, b) in back.data.iter().zip(&y.data) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
