//! Dense complex matrices and a Hermitian eigenvalue solver: Householder
//! tridiagonalization followed by implicit-shift QL.

use num_complex::Complex64;

use crate::error::{MbError, Result};
use crate::params::Spectrum;

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_real_diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[k * other.cols + j];
                }
            }
        }
        out
    }

    /// `A^dagger A`.
    pub fn gram(&self) -> Self {
        let n = self.cols;
        let mut g = Self::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut s = Complex64::new(0.0, 0.0);
                for k in 0..self.rows {
                    s += self[(k, i)].conj() * self[(k, j)];
                }
                g[(i, j)] = s;
                g[(j, i)] = s.conj();
            }
        }
        for i in 0..n {
            g[(i, i)].im = 0.0;
        }
        g
    }

    /// Leading `rows x cols` block.
    pub fn block(&self, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self[(i, j)])
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Checks Hermiticity within `1e-12 ||A||_F` and finiteness.
pub fn check_hermitian(a: &ComplexMatrix) -> Result<()> {
    if !a.is_square() {
        return Err(MbError::Domain(format!("matrix is {}x{}, not square", a.rows, a.cols)));
    }
    if a.data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(MbError::Domain("non-finite matrix entry".into()));
    }
    let n = a.rows;
    let mut d = 0.0;
    for i in 0..n {
        for j in 0..n {
            d += (a[(i, j)] - a[(j, i)].conj()).norm_sqr();
        }
    }
    let norm = a.frobenius();
    if d.sqrt() > 1e-12 * norm {
        return Err(MbError::Domain(format!("matrix not Hermitian: ||A - A^H|| = {:e}", d.sqrt())));
    }
    Ok(())
}

/// Reduces a Hermitian matrix to real symmetric tridiagonal form.
/// Returns the diagonal and the moduli of the off-diagonal (length n-1).
pub fn tridiagonalize(a: &ComplexMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = a.rows;
    let mut a = a.clone();
    let mut e = vec![0.0; n.saturating_sub(1)];
    let zero = Complex64::new(0.0, 0.0);
    for k in 0..n.saturating_sub(1) {
        let m = n - k - 1;
        let x: Vec<Complex64> = (0..m).map(|i| a[(k + 1 + i, k)]).collect();
        let alpha = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if alpha == 0.0 {
            continue;
        }
        e[k] = alpha;
        if m == 1 {
            continue;
        }
        let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { Complex64::new(1.0, 0.0) };
        let mut v = x;
        v[0] += phase * alpha;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        let tau = 2.0 / vnorm2;
        // p = tau B v on the trailing block B
        let mut p = vec![zero; m];
        for i in 0..m {
            let mut s = zero;
            for j in 0..m {
                s += a[(k + 1 + i, k + 1 + j)] * v[j];
            }
            p[i] = s * tau;
        }
        let vp: Complex64 = v.iter().zip(&p).map(|(vi, pi)| vi.conj() * pi).sum();
        let kk = vp * (0.5 * tau);
        let q: Vec<Complex64> = p.iter().zip(&v).map(|(pi, vi)| pi - kk * vi).collect();
        for i in 0..m {
            for j in 0..m {
                let upd = v[i] * q[j].conj() + q[i] * v[j].conj();
                a[(k + 1 + i, k + 1 + j)] -= upd;
            }
        }
        for i in 0..m {
            a[(k + 1 + i, k)] = zero;
            a[(k, k + 1 + i)] = zero;
        }
    }
    let d = (0..n).map(|i| a[(i, i)].re).collect();
    (d, e)
}

/// Eigenvalues of a real symmetric tridiagonal matrix by implicit QL.
/// `e[i]` couples `i` and `i + 1`.
pub fn tridiagonal_eigenvalues(mut d: Vec<f64>, off: &[f64]) -> Result<Vec<f64>> {
    let n = d.len();
    if n == 0 {
        return Ok(d);
    }
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(&off[..n - 1]);
    let max_total = 30 * n;
    let mut total = 0usize;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            total += 1;
            if iter > 30 || total > max_total {
                return Err(MbError::Convergence(format!("QL iteration did not converge at index {l}")));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut early = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    early = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if early {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(d)
}

/// All eigenvalues of a Hermitian matrix, descending.
pub fn hermitian_eigenvalues(a: &ComplexMatrix) -> Result<Spectrum> {
    check_hermitian(a)?;
    let (d, e) = tridiagonalize(a);
    let mut ev = tridiagonal_eigenvalues(d, &e)?;
    ev.sort_by(|x, y| y.partial_cmp(x).unwrap());
    Ok(Spectrum { values: ev })
}

/// Eigenvalues of `Y^dagger Y`, with roundoff negatives clipped to zero.
pub fn gram_spectrum(y: &ComplexMatrix) -> Result<Spectrum> {
    let g = y.gram();
    let mut s = hermitian_eigenvalues(&g)?;
    let tol = 1e-12 * y.frobenius().powi(2);
    for v in s.values.iter_mut() {
        if *v < 0.0 && *v >= -tol {
            *v = 0.0;
        }
    }
    Ok(s)
}
