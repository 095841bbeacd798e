//! Ensemble parameters, exponent sequences and exact log-densities.

use serde::{Deserialize, Serialize};

use crate::error::{domain, MbError, Result};
use crate::special::ln_gamma;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Laguerre,
    Jacobi,
    LaguerreThetaZero,
}

impl std::str::FromStr for Family {
    type Err = MbError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "laguerre" => Ok(Family::Laguerre),
            "jacobi" => Ok(Family::Jacobi),
            "laguerre_theta_zero" | "theta0" | "theta_zero" => Ok(Family::LaguerreThetaZero),
            other => domain(format!("unknown family '{other}'")),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::Laguerre => "laguerre",
            Family::Jacobi => "jacobi",
            Family::LaguerreThetaZero => "laguerre_theta_zero",
        })
    }
}

/// Parameters of a Muttalib-Borodin ensemble.
///
/// For the Jacobi family `c` is the exponent of `x` and `c2` the exponent of
/// `1 - x`; the latter is also the base of the beta sequence. `c2` is unused
/// for the Laguerre families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "ParamsRepr", try_from = "ParamsRepr")]
pub struct EnsembleParams {
    pub family: Family,
    pub theta: f64,
    pub c: f64,
    pub c2: f64,
    pub n: usize,
}

#[derive(Serialize, Deserialize)]
struct ParamsRepr {
    family: Family,
    theta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    n: usize,
}

impl From<EnsembleParams> for ParamsRepr {
    fn from(p: EnsembleParams) -> Self {
        match p.family {
            Family::Jacobi => ParamsRepr {
                family: p.family,
                theta: p.theta,
                c: None,
                c1: Some(p.c),
                c2: Some(p.c2),
                beta: Some(p.c2),
                n: p.n,
            },
            _ => ParamsRepr {
                family: p.family,
                theta: p.theta,
                c: Some(p.c),
                c1: None,
                c2: None,
                beta: None,
                n: p.n,
            },
        }
    }
}

impl TryFrom<ParamsRepr> for EnsembleParams {
    type Error = MbError;
    fn try_from(r: ParamsRepr) -> Result<Self> {
        match r.family {
            Family::Jacobi => {
                let c1 = r.c1.or(r.c).ok_or_else(|| MbError::Domain("missing c1".into()))?;
                let c2 = r.c2.or(r.beta).ok_or_else(|| MbError::Domain("missing c2".into()))?;
                EnsembleParams::jacobi(r.theta, c1, c2, r.n)
            }
            Family::Laguerre => {
                EnsembleParams::laguerre(r.theta, r.c.ok_or_else(|| MbError::Domain("missing c".into()))?, r.n)
            }
            Family::LaguerreThetaZero => {
                EnsembleParams::theta_zero(r.c.ok_or_else(|| MbError::Domain("missing c".into()))?, r.n)
            }
        }
    }
}

impl EnsembleParams {
    pub fn laguerre(theta: f64, c: f64, n: usize) -> Result<Self> {
        Self { family: Family::Laguerre, theta, c, c2: 0.0, n }.validated()
    }

    pub fn jacobi(theta: f64, c1: f64, c2: f64, n: usize) -> Result<Self> {
        Self { family: Family::Jacobi, theta, c: c1, c2, n }.validated()
    }

    pub fn theta_zero(c: f64, n: usize) -> Result<Self> {
        Self { family: Family::LaguerreThetaZero, theta: 0.0, c, c2: 0.0, n }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !self.theta.is_finite() || self.theta < 0.0 {
            return domain(format!("theta must be >= 0, got {}", self.theta));
        }
        if !(self.c > -1.0) || !self.c.is_finite() {
            return domain(format!("exponent must be > -1, got {}", self.c));
        }
        if self.family == Family::Jacobi && (!(self.c2 > -1.0) || !self.c2.is_finite()) {
            return domain(format!("c2 must be > -1, got {}", self.c2));
        }
        if self.n < 1 {
            return domain("n must be >= 1");
        }
        let zero = self.theta == 0.0;
        if zero != (self.family == Family::LaguerreThetaZero) {
            return domain("family laguerre_theta_zero is required exactly when theta = 0");
        }
        Ok(self)
    }

    pub fn alpha(&self) -> AlphaSequence {
        AlphaSequence { values: (0..self.n).map(|j| self.theta * j as f64 + self.c).collect() }
    }

    /// Beta sequence of the Jacobi construction, base `c2`.
    pub fn beta(&self) -> BetaSequence {
        beta_sequence(self.c2, self.n)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("params serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| MbError::Domain(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaSequence {
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetaSequence {
    pub values: Vec<f64>,
    pub base: f64,
}

/// `alpha_j = theta (j - 1) + c` for `j = 1..n`.
pub fn alpha_sequence(theta: f64, c: f64, n: usize) -> Result<AlphaSequence> {
    if !(c > -1.0) {
        return domain(format!("c must be > -1, got {c}"));
    }
    if n < 1 {
        return domain("n must be >= 1");
    }
    if !(theta >= 0.0) {
        return domain("theta must be >= 0");
    }
    Ok(AlphaSequence { values: (0..n).map(|j| theta * j as f64 + c).collect() })
}

/// `beta_k = beta + n - k` for `k = 1..n`.
pub fn beta_sequence(beta: f64, n: usize) -> BetaSequence {
    BetaSequence { values: (1..=n).map(|k| beta + (n - k) as f64).collect(), base: beta }
}

/// Descending list of eigenvalues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub values: Vec<f64>,
}

impl Spectrum {
    /// Sorts descending. NaNs are rejected.
    pub fn from_unsorted(mut values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| v.is_nan()) {
            return domain("spectrum contains NaN");
        }
        values.sort_by(|a, b| b.partial_cmp(a).unwrap());
        Ok(Self { values })
    }

    /// Sorts and checks the family's domain.
    pub fn checked(values: Vec<f64>, family: Family) -> Result<Self> {
        let s = Self::from_unsorted(values)?;
        let ok = match family {
            Family::Jacobi => s.values.iter().all(|&v| (0.0..=1.0).contains(&v)),
            _ => s.values.iter().all(|&v| v >= 0.0),
        };
        if !ok {
            return domain("eigenvalue outside the family's domain");
        }
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_descending(&self) -> bool {
        self.values.windows(2).all(|w| w[0] >= w[1])
    }
}

/// A log-density value; `degenerate` marks coincident eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDensity {
    pub value: f64,
    pub degenerate: bool,
}

impl LogDensity {
    fn degenerate() -> Self {
        Self { value: f64::NEG_INFINITY, degenerate: true }
    }
}

fn ln_factorial_prod(n: usize) -> f64 {
    (1..n).map(|l| ln_gamma(l as f64 + 1.0)).sum()
}

fn sorted_input(params: &EnsembleParams, spec: &Spectrum, family: Family) -> Result<Vec<f64>> {
    if params.family != family {
        return domain(format!("expected {family:?} parameters"));
    }
    if spec.len() != params.n {
        return domain(format!("spectrum has {} values, expected {}", spec.len(), params.n));
    }
    let s = Spectrum::from_unsorted(spec.values.clone())?;
    Ok(s.values)
}

fn has_ties(v: &[f64]) -> bool {
    v.windows(2).any(|w| w[0] == w[1])
}

fn ln_two_body(v: &[f64], theta: f64) -> f64 {
    let mut s = 0.0;
    for j in 0..v.len() {
        for k in (j + 1)..v.len() {
            s += (v[j] - v[k]).ln() + (v[j].powf(theta) - v[k].powf(theta)).ln();
        }
    }
    s
}

/// Normalized log-density of the Laguerre ensemble on the ordered simplex.
pub fn log_pdf_laguerre(params: &EnsembleParams, spec: &Spectrum) -> Result<LogDensity> {
    let v = sorted_input(params, spec, Family::Laguerre)?;
    if v.iter().any(|&x| x < 0.0) {
        return domain("negative eigenvalue");
    }
    if has_ties(&v) {
        return Ok(LogDensity::degenerate());
    }
    let (theta, c, n) = (params.theta, params.c, params.n);
    let one_body: f64 = v.iter().map(|&x| c * x.ln() - x).sum();
    let ln_c: f64 = (0..n).map(|l| ln_gamma(theta * l as f64 + c + 1.0)).sum::<f64>()
        + (n * (n - 1)) as f64 / 2.0 * theta.ln()
        + ln_factorial_prod(n);
    Ok(LogDensity { value: one_body + ln_two_body(&v, theta) - ln_c, degenerate: false })
}

/// Normalized log-density of the Jacobi ensemble; the exponent of `1 - x` is `c2`.
pub fn log_pdf_jacobi(params: &EnsembleParams, spec: &Spectrum) -> Result<LogDensity> {
    let v = sorted_input(params, spec, Family::Jacobi)?;
    if v.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
        return domain("eigenvalue outside [0, 1]");
    }
    if has_ties(&v) {
        return Ok(LogDensity::degenerate());
    }
    let (theta, c, beta, n) = (params.theta, params.c, params.c2, params.n);
    let one_body: f64 = v.iter().map(|&x| c * x.ln() + beta * (1.0 - x).ln()).sum();
    let betas = beta_sequence(beta, n);
    let mut ln_c = 0.0;
    for l in 0..n {
        let a = theta * l as f64 + c;
        ln_c += ln_gamma(a + 1.0) + ln_gamma(betas.values[l] + 1.0) - ln_gamma(a + beta + n as f64 + 1.0);
    }
    ln_c += (n * (n - 1)) as f64 / 2.0 * theta.ln() + ln_factorial_prod(n);
    Ok(LogDensity { value: one_body + ln_two_body(&v, theta) - ln_c, degenerate: false })
}

/// Normalized log-density of the theta = 0 Laguerre ensemble.
pub fn log_pdf_theta0(params: &EnsembleParams, spec: &Spectrum) -> Result<LogDensity> {
    let v = sorted_input(params, spec, Family::LaguerreThetaZero)?;
    if v.iter().any(|&x| x < 0.0) {
        return domain("negative eigenvalue");
    }
    if has_ties(&v) {
        return Ok(LogDensity::degenerate());
    }
    let (c, n) = (params.c, params.n);
    let mut s: f64 = v.iter().map(|&x| c * x.ln() - x).sum();
    for j in 0..n {
        for k in (j + 1)..n {
            s += (v[j] - v[k]).ln() + (v[j].ln() - v[k].ln()).ln();
        }
    }
    let ln_c = n as f64 * ln_gamma(c + 1.0) + ln_factorial_prod(n);
    Ok(LogDensity { value: s - ln_c, degenerate: false })
}

/// Dispatches on the family.
pub fn log_pdf(params: &EnsembleParams, spec: &Spectrum) -> Result<LogDensity> {
    match params.family {
        Family::Laguerre => log_pdf_laguerre(params, spec),
        Family::Jacobi => log_pdf_jacobi(params, spec),
        Family::LaguerreThetaZero => log_pdf_theta0(params, spec),
    }
}
