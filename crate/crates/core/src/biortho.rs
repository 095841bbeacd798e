//! Biorthogonal polynomials `q_j`, bimoments, and a kernel oracle built
//! from the inverse bimoment matrix.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rug::Float;

use crate::error::{domain, MbError, Result};
use crate::params::{EnsembleParams, Family};
use crate::sampler::{sample_spectrum, RngStream, SampleMethod};
use crate::special::ln_gamma;

/// Polynomial coefficients stored as sign and log-magnitude, lowest degree first.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyCoeffs {
    pub sign: Vec<f64>,
    pub ln_abs: Vec<f64>,
}

impl PolyCoeffs {
    pub fn degree(&self) -> usize {
        self.sign.len() - 1
    }

    pub fn coeff(&self, l: usize) -> f64 {
        self.sign[l] * self.ln_abs[l].exp()
    }

    pub fn coeffs(&self) -> Vec<f64> {
        (0..self.sign.len()).map(|l| self.coeff(l)).collect()
    }

    /// Value at `x`, summed in 256-bit arithmetic.
    pub fn eval(&self, x: f64) -> f64 {
        let prec = 256;
        let lx = if x != 0.0 { Some(Float::with_val(prec, x.abs()).ln()) } else { None };
        let mut s = Float::with_val(prec, 0.0);
        for l in 0..self.sign.len() {
            if self.sign[l] == 0.0 {
                continue;
            }
            let term = match (&lx, l) {
                (_, 0) => Float::with_val(prec, self.ln_abs[0]).exp(),
                (None, _) => continue,
                (Some(lx), _) => (Float::with_val(prec, lx * l as f64) + self.ln_abs[l]).exp(),
            };
            let neg = (self.sign[l] < 0.0) ^ (x < 0.0 && l % 2 == 1);
            if neg {
                s -= term;
            } else {
                s += term;
            }
        }
        s.to_f64()
    }
}

fn check_theta_c(theta: f64, c: f64) -> Result<()> {
    if !(theta > 0.0) || !(c > -1.0) {
        return domain(format!("need theta > 0 and c > -1, got theta={theta}, c={c}"));
    }
    Ok(())
}

/// `q_j` for the Laguerre weight.
pub fn laguerre_q(theta: f64, c: f64, j: usize) -> Result<PolyCoeffs> {
    check_theta_c(theta, c)?;
    let top = ln_gamma(theta * j as f64 + c + 1.0);
    let mut sign = Vec::with_capacity(j + 1);
    let mut ln_abs = Vec::with_capacity(j + 1);
    for l in 0..=j {
        sign.push(if (j + l).is_multiple_of(2) { 1.0 } else { -1.0 });
        ln_abs.push(ln_binom_int(j, l) + top - ln_gamma(theta * l as f64 + c + 1.0));
    }
    ln_abs[j] = 0.0;
    Ok(PolyCoeffs { sign, ln_abs })
}

/// `q_j` for the Jacobi weight `x^c1 (1 - x)^c2`.
pub fn jacobi_q(theta: f64, c1: f64, c2: f64, j: usize) -> Result<PolyCoeffs> {
    check_theta_c(theta, c1)?;
    if !(c2 > -1.0) {
        return domain(format!("c2 must be > -1, got {c2}"));
    }
    let delta = 1.0 + c1 + c2 + j as f64;
    // (a)_p = Gamma(a + p) / Gamma(a); the Gamma(a) factors cancel
    let lead = ln_gamma(1.0 + c1 + theta * j as f64) - ln_gamma(delta + theta * j as f64);
    let mut sign = Vec::with_capacity(j + 1);
    let mut ln_abs = Vec::with_capacity(j + 1);
    for l in 0..=j {
        let tl = theta * l as f64;
        sign.push(if (j + l).is_multiple_of(2) { 1.0 } else { -1.0 });
        ln_abs.push(ln_binom_int(j, l) + lead + ln_gamma(delta + tl) - ln_gamma(1.0 + c1 + tl));
    }
    ln_abs[j] = 0.0;
    Ok(PolyCoeffs { sign, ln_abs })
}

fn ln_binom_int(n: usize, k: usize) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// `q_N` of the ensemble.
pub fn q_poly(params: &EnsembleParams, j: usize) -> Result<PolyCoeffs> {
    match params.family {
        Family::Laguerre => laguerre_q(params.theta, params.c, j),
        Family::Jacobi => jacobi_q(params.theta, params.c, params.c2, j),
        Family::LaguerreThetaZero => domain("biorthogonal polynomials are not defined at theta = 0"),
    }
}

/// `ln I_{jk}`, `I_{jk} = int x^j (x^theta)^k w(x) dx`.
pub fn ln_bimoment(params: &EnsembleParams, j: usize, k: usize) -> f64 {
    let s = params.c + j as f64 + params.theta * k as f64 + 1.0;
    match params.family {
        Family::Jacobi => ln_gamma(s) + ln_gamma(params.c2 + 1.0) - ln_gamma(s + params.c2 + 1.0),
        _ => ln_gamma(s),
    }
}

pub fn bimoment(params: &EnsembleParams, j: usize, k: usize) -> f64 {
    ln_bimoment(params, j, k).exp()
}

fn mp_ln_bimoment(params: &EnsembleParams, j: usize, k: usize, prec: u32) -> Float {
    let s: Float = Float::with_val(prec, params.c + j as f64) + Float::with_val(prec, params.theta) * k as f64 + 1.0;
    match params.family {
        Family::Jacobi => {
            let c2: Float = Float::with_val(prec, params.c2) + 1.0;
            let sum = Float::with_val(prec, &s + &c2);
            s.ln_gamma() + c2.ln_gamma() - sum.ln_gamma()
        }
        _ => s.ln_gamma(),
    }
}

/// The pairing `int x^m q_k(x^theta) w(x) dx` and the largest summand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pairing {
    pub value: f64,
    pub scale: f64,
}

impl Pairing {
    pub fn residual(&self) -> f64 {
        self.value / self.scale
    }
}

fn is_int(v: f64) -> bool {
    v >= 0.0 && v == v.floor() && v < 1e6
}

/// Exact pairing for the Laguerre weight with integer `theta`, `c`:
/// `(theta k + c)! sum_l (-1)^{k+l} binom(k, l) (theta l + c + 1)_m`.
fn laguerre_pairing_exact(theta: u64, c: u64, k: u64, m: u64) -> (BigInt, BigInt) {
    let mut fact = BigInt::one();
    for i in 1..=(theta * k + c) {
        fact *= i;
    }
    let mut sum = BigInt::zero();
    let mut max = BigInt::zero();
    let mut binom = BigInt::one();
    for l in 0..=k {
        if l > 0 {
            binom = binom * (k - l + 1) / l;
        }
        let mut poch = BigInt::one();
        for i in 0..m {
            poch *= theta * l + c + 1 + i;
        }
        let t = &binom * &poch;
        if t > max {
            max = t.clone();
        }
        if (k + l).is_multiple_of(2) {
            sum += t;
        } else {
            sum -= t;
        }
    }
    (sum * &fact, max * fact)
}

/// `int x^m q_k(x^theta) w(x) dx`. Zero for `m < k`; `h_k > 0` for `m = k`.
/// Exact big-integer arithmetic for integer Laguerre parameters, 256-bit
/// floating point otherwise.
pub fn biortho_pairing(params: &EnsembleParams, k: usize, m: usize) -> Result<Pairing> {
    let params = params.validated()?;
    if params.family == Family::Laguerre && is_int(params.theta) && is_int(params.c) {
        let (v, s) = laguerre_pairing_exact(params.theta as u64, params.c as u64, k as u64, m as u64);
        let to_f = |b: &BigInt| b.to_string().parse::<f64>().unwrap_or(f64::INFINITY);
        return Ok(Pairing { value: to_f(&v), scale: to_f(&s) });
    }
    let q = q_poly(&params, k)?;
    let prec = 256;
    let mut sum = Float::with_val(prec, 0.0);
    let mut max = Float::with_val(prec, 0.0);
    for l in 0..=k {
        let t = (mp_ln_bimoment(&params, m, l, prec) + q.ln_abs[l]).exp();
        if t > max {
            max = t.clone();
        }
        if q.sign[l] < 0.0 {
            sum -= t;
        } else {
            sum += t;
        }
    }
    Ok(Pairing { value: sum.to_f64(), scale: max.to_f64() })
}

/// Normalised biorthogonality residual for `m < k`.
pub fn biortho_residual(params: &EnsembleParams, k: usize, m: usize) -> Result<f64> {
    if m >= k {
        return domain(format!("need m < k, got m={m}, k={k}"));
    }
    Ok(biortho_pairing(params, k, m)?.residual())
}

/// Finite-N kernel `w(x)^{1/2} w(y)^{1/2} sum x^j (B^{-1})_{kj} y^{theta k}`
/// with the inverse bimoment matrix computed in multiprecision.
#[derive(Debug, Clone)]
pub struct KernelOracle {
    params: EnsembleParams,
    inv: Vec<Vec<Float>>,
    prec: u32,
}

const ORACLE_PREC: u32 = 512;
const ORACLE_MAX_N: usize = 12;

impl KernelOracle {
    pub fn new(params: &EnsembleParams) -> Result<Self> {
        let params = params.validated()?;
        if params.family == Family::LaguerreThetaZero {
            return domain("kernel oracle needs theta > 0");
        }
        let n = params.n;
        if n > ORACLE_MAX_N {
            return Err(MbError::Refused(format!("bimoment oracle limited to N <= {ORACLE_MAX_N}, got {n}")));
        }
        let prec = ORACLE_PREC;
        let b: Vec<Vec<Float>> = (0..n).map(|j| (0..n).map(|k| mp_ln_bimoment(&params, j, k, prec).exp()).collect()).collect();
        let inv = mp_inverse(&b, prec)?;
        let norm1 = |m: &Vec<Vec<Float>>| -> f64 {
            (0..n).map(|k| (0..n).map(|j| m[j][k].to_f64().abs()).sum::<f64>()).fold(0.0, f64::max)
        };
        let cond = norm1(&b) * norm1(&inv);
        // keep at least 60 of the working bits
        if !(cond < 2f64.powi(prec as i32 - 60)) {
            return Err(MbError::Refused(format!("bimoment matrix condition {cond:e} too large")));
        }
        Ok(Self { params, inv, prec })
    }

    fn ln_weight(&self, x: f64) -> f64 {
        match self.params.family {
            Family::Jacobi => self.params.c * x.ln() + self.params.c2 * (1.0 - x).ln(),
            _ => self.params.c * x.ln() - x,
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        let jac = self.params.family == Family::Jacobi;
        if !(x > 0.0 && y > 0.0) || (jac && !(x < 1.0 && y < 1.0)) {
            return domain(format!("({x}, {y}) outside the domain"));
        }
        let n = self.params.n;
        let p = self.prec;
        let lx = Float::with_val(p, x).ln();
        let ly = Float::with_val(p, y).ln() * self.params.theta;
        let mut s = Float::with_val(p, 0.0);
        for j in 0..n {
            let xj = Float::with_val(p, &lx * j as f64).exp();
            for k in 0..n {
                let yk = Float::with_val(p, &ly * k as f64).exp();
                s += Float::with_val(p, &xj * &yk) * &self.inv[k][j];
            }
        }
        let w = 0.5 * (self.ln_weight(x) + self.ln_weight(y));
        Ok(s.to_f64() * w.exp())
    }
}

/// One-shot oracle evaluation.
pub fn kernel_oracle(params: &EnsembleParams, x: f64, y: f64) -> Result<f64> {
    KernelOracle::new(params)?.eval(x, y)
}

/// Gauss-Jordan inverse with partial pivoting.
fn mp_inverse(b: &[Vec<Float>], prec: u32) -> Result<Vec<Vec<Float>>> {
    let n = b.len();
    let mut a: Vec<Vec<Float>> = b.to_vec();
    let mut inv: Vec<Vec<Float>> =
        (0..n).map(|i| (0..n).map(|j| Float::with_val(prec, if i == j { 1.0 } else { 0.0 })).collect()).collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].clone().abs().partial_cmp(&a[j][col].clone().abs()).unwrap())
            .unwrap();
        if a[piv][col].is_zero() {
            return Err(MbError::Refused("singular bimoment matrix".into()));
        }
        a.swap(col, piv);
        inv.swap(col, piv);
        let d = a[col][col].clone();
        for k in 0..n {
            a[col][k] /= &d;
            inv[col][k] /= &d;
        }
        for i in 0..n {
            if i == col {
                continue;
            }
            let f = a[i][col].clone();
            if f.is_zero() {
                continue;
            }
            for k in 0..n {
                let t = Float::with_val(prec, &f * &a[col][k]);
                a[i][k] -= t;
                let t = Float::with_val(prec, &f * &inv[col][k]);
                inv[i][k] -= t;
            }
        }
    }
    Ok(inv)
}

/// Maximal residual of the hypergeometric differential equation satisfied
/// by the rescaled `q_j` (integer `theta`), over 20 sample points, relative
/// to the size of the terms.
pub fn hypergeom_check(params: &EnsembleParams, j: usize) -> Result<f64> {
    let params = params.validated()?;
    let theta = params.theta;
    if !(theta >= 1.0 && theta == theta.floor()) {
        return domain("hypergeometric form needs a positive integer theta");
    }
    let t = theta as usize;
    let q = q_poly(&params, j)?;
    let (coef, a, b): (Vec<f64>, Vec<f64>, Vec<f64>) = match params.family {
        Family::Jacobi => {
            let delta = 1.0 + params.c + params.c2 + j as f64;
            let mut a = vec![-(j as f64)];
            a.extend((0..t).map(|i| (delta + i as f64) / theta));
            let b = (1..=t).map(|i| (params.c + i as f64) / theta).collect();
            (q.coeffs(), a, b)
        }
        _ => {
            // f(u) = q_j(theta^theta u)
            let s = theta.powf(theta);
            let c: Vec<f64> = (0..=j).map(|l| q.sign[l] * (q.ln_abs[l] + l as f64 * s.ln()).exp()).collect();
            let b = (1..=t).map(|i| (params.c + i as f64) / theta).collect();
            (c, vec![-(j as f64)], b)
        }
    };
    // u prod (D + a_n) f - D prod (D + b_n - 1) f, D = u d/du, coefficientwise
    let lhs = |l: usize| -> f64 {
        if l == 0 || l - 1 > j {
            return 0.0;
        }
        a.iter().map(|an| (l - 1) as f64 + an).product::<f64>() * coef[l - 1]
    };
    let rhs = |l: usize| -> f64 {
        if l > j {
            return 0.0;
        }
        l as f64 * b.iter().map(|bn| l as f64 + bn - 1.0).product::<f64>() * coef[l]
    };
    let hi = match params.family {
        Family::Jacobi => 1.0,
        _ => 2.0 * j.max(1) as f64,
    };
    let mut worst: f64 = 0.0;
    for i in 1..=20 {
        let u = hi * i as f64 / 20.0;
        let (mut r, mut mag) = (0.0, 0.0);
        for l in 0..=(j + 1) {
            let p = u.powi(l as i32);
            let (x, y) = (lhs(l) * p, rhs(l) * p);
            r += x - y;
            mag += x.abs() + y.abs();
        }
        if mag > 0.0 {
            worst = worst.max(r.abs() / mag);
        }
    }
    Ok(worst)
}

/// Monte Carlo mean and standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_err: f64,
}

/// Average of `prod (x - lambda_l^theta)` over sampled spectra.
pub fn char_poly_mc(params: &EnsembleParams, x: f64, replicas: usize, rng: &mut RngStream) -> Result<McEstimate> {
    let params = params.validated()?;
    if replicas < 2 {
        return domain("need at least two replicas");
    }
    let mut vals = Vec::with_capacity(replicas);
    for _ in 0..replicas {
        let s = sample_spectrum(&params, SampleMethod::Matrix, rng)?;
        vals.push(s.values.iter().map(|l| x - l.powf(params.theta)).product::<f64>());
    }
    let n = replicas as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(McEstimate { mean, std_err: (var / n).sqrt() })
}
