//! Quadrature helpers: double-exponential integration on intervals and
//! composite Gauss-Legendre rules on piecewise-linear complex contours.

use gauss_quad::GaussLegendre;
use num_complex::Complex64;

/// Integral of `f` over `[a, b]` by tanh-sinh quadrature; tolerates
/// integrable endpoint singularities.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    integrate_with_error(f, a, b, tol).0
}

/// Tanh-sinh quadrature with level doubling. Nodes near an endpoint are
/// placed at an exactly computed distance from it, so singular endpoints
/// keep full relative precision. Returns the integral and the difference
/// between the last two levels.
pub fn integrate_with_error<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    use std::f64::consts::FRAC_PI_2;
    if a == b {
        return (0.0, 0.0);
    }
    let c = 0.5 * (b - a);
    let eval = |t: f64| -> f64 {
        // contribution of the symmetric pair +-t
        let u = FRAC_PI_2 * t.sinh();
        let ch = u.cosh();
        let w = FRAC_PI_2 * t.cosh() / (ch * ch);
        let delta = c * (-u).exp() / ch;
        let mut s = 0.0;
        for x in [a + delta, b - delta] {
            if x != a && x != b {
                let v = f(x);
                if v.is_finite() {
                    s += v;
                }
            }
        }
        w * s
    };
    let tmax = 6.0;
    let mut h = 0.5;
    let mut sum = FRAC_PI_2 * f(0.5 * (a + b));
    let mut k = 1;
    while k as f64 * h <= tmax {
        sum += eval(k as f64 * h);
        k += 1;
    }
    let mut prev = c * h * sum;
    let mut err = f64::INFINITY;
    for _ in 0..9 {
        h *= 0.5;
        let mut k = 1;
        while k as f64 * h <= tmax {
            sum += eval(k as f64 * h);
            k += 2;
        }
        let cur = c * h * sum;
        err = (cur - prev).abs();
        prev = cur;
        if err <= tol.max(1e-15 * cur.abs()) {
            break;
        }
    }
    (prev, err)
}

/// Integral over `[a, b]` split into `pieces` equal subintervals.
pub fn integrate_split<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, pieces: usize, tol: f64) -> f64 {
    let h = (b - a) / pieces as f64;
    (0..pieces).map(|k| integrate(&f, a + k as f64 * h, a + (k + 1) as f64 * h, tol)).sum()
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GlRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GlRule {
    pub fn new(deg: usize) -> Self {
        let gl = GaussLegendre::new(deg.max(2)).expect("degree >= 2");
        let (nodes, weights) = gl.as_node_weight_pairs().iter().copied().unzip();
        Self { nodes, weights }
    }

    /// Composite rule for a real integral on `[a, b]` with `panels` panels.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64, panels: usize) -> f64 {
        let h = (b - a) / panels as f64;
        let mut s = 0.0;
        for p in 0..panels {
            let mid = a + (p as f64 + 0.5) * h;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                s += w * f(mid + 0.5 * h * x);
            }
        }
        0.5 * h * s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContourKind {
    ClosedRectangle,
    VerticalLine,
    HankelRays,
    HankelLoop,
}

/// A discretized contour: points `z_k` with complex weights `dz_k`, so that
/// `sum f(z_k) dz_k` approximates the contour integral of `f`.
#[derive(Debug, Clone)]
pub struct ContourSpec {
    pub kind: ContourKind,
    pub anchor: Complex64,
    pub nodes: Vec<(Complex64, Complex64)>,
}

impl ContourSpec {
    pub fn new(kind: ContourKind, anchor: Complex64) -> Self {
        Self { kind, anchor, nodes: Vec::new() }
    }

    /// Appends the straight segment `a -> b` with `panels` equal panels.
    pub fn segment(&mut self, rule: &GlRule, a: Complex64, b: Complex64, panels: usize) {
        let h = (b - a) / panels as f64;
        for p in 0..panels {
            let mid = a + h * (p as f64 + 0.5);
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                self.nodes.push((mid + h * (0.5 * x), h * (0.5 * w)));
            }
        }
    }

    /// Appends the segment `a -> b`, with panels growing geometrically from
    /// length `h0` at the end `fine` (`true` = fine at `a`).
    pub fn graded_segment(&mut self, rule: &GlRule, a: Complex64, b: Complex64, h0: f64, ratio: f64, fine_at_a: bool) {
        let len = (b - a).norm();
        if len == 0.0 {
            return;
        }
        let mut cuts = vec![0.0];
        let mut h = h0.min(len);
        while *cuts.last().unwrap() + h < len {
            let next = cuts.last().unwrap() + h;
            cuts.push(next);
            h *= ratio;
        }
        cuts.push(len);
        if !fine_at_a {
            cuts = cuts.iter().rev().map(|&t| len - t).collect();
        }
        let dir = (b - a) / len;
        for win in cuts.windows(2) {
            self.segment(rule, a + dir * win[0], a + dir * win[1], 1);
        }
    }

    pub fn integrate<F: FnMut(Complex64) -> Complex64>(&self, mut f: F) -> Complex64 {
        self.nodes.iter().map(|&(z, w)| f(z) * w).sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Counter-clockwise rectangle with corners `x0 - ih, x1 - ih, x1 + ih, x0 + ih`.
pub fn closed_rectangle(rule: &GlRule, x0: f64, x1: f64, h: f64, panels: usize) -> ContourSpec {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let mut s = ContourSpec::new(ContourKind::ClosedRectangle, c(0.5 * (x0 + x1), 0.0));
    let horiz = ((panels as f64 * (x1 - x0) / (2.0 * h)).ceil() as usize).max(panels);
    s.segment(rule, c(x0, -h), c(x1, -h), horiz);
    s.segment(rule, c(x1, -h), c(x1, h), panels);
    s.segment(rule, c(x1, h), c(x0, h), horiz);
    s.segment(rule, c(x0, h), c(x0, -h), panels);
    s
}

/// Two rays from `vertex` at angles `pi - phi` and `-(pi - phi)` measured
/// from the positive axis, i.e. opening to the left, oriented upward:
/// in along the lower ray, out along the upper one. Rays have length
/// `length`; panels start at `h0` near the vertex.
pub fn hankel_rays(rule: &GlRule, vertex: Complex64, phi: f64, length: f64, h0: f64) -> ContourSpec {
    let mut s = ContourSpec::new(ContourKind::HankelRays, vertex);
    let up = Complex64::from_polar(1.0, std::f64::consts::PI - phi);
    let down = up.conj();
    s.graded_segment(rule, vertex + down * length, vertex, h0, 1.6, false);
    s.graded_segment(rule, vertex, vertex + up * length, h0, 1.6, true);
    s
}

/// Loop around the positive real axis opening to the right: from
/// `right + i h` to `left + i h`, down to `left - i h`, out to `right - i h`
/// (counter-clockwise about the enclosed axis). Panels are refined near the
/// left cap with initial size `h0`.
pub fn hankel_loop(rule: &GlRule, left: f64, right: f64, h: f64, h0: f64) -> ContourSpec {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let mut s = ContourSpec::new(ContourKind::HankelLoop, c(left, 0.0));
    s.graded_segment(rule, c(right, h), c(left, h), h0, 1.6, false);
    let vp = ((2.0 * h / h0).ceil() as usize).clamp(2, 64);
    s.segment(rule, c(left, h), c(left, -h), vp);
    s.graded_segment(rule, c(left, -h), c(right, -h), h0, 1.6, true);
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn de_handles_endpoint_singularity() {
        let v = integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0, 1e-12);
        assert!((v - 2.0).abs() < 1e-10);
    }

    #[test]
    fn rectangle_residue() {
        let rule = GlRule::new(20);
        let r = closed_rectangle(&rule, -1.0, 2.0, 0.7, 4);
        let v = r.integrate(|z| 1.0 / (z - 0.5));
        assert!((v - Complex64::new(0.0, 2.0 * PI)).norm() < 1e-12);
        let v = r.integrate(|z| 1.0 / (z - 3.0));
        assert!(v.norm() < 1e-12);
    }

    #[test]
    fn hankel_rays_gamma_reciprocal() {
        // (1/2 pi i) int e^t t^{-s} dt over a Hankel contour = 1 / Gamma(s)
        let rule = GlRule::new(20);
        let rays = hankel_rays(&rule, Complex64::new(1.0, 0.0), PI / 4.0, 60.0, 0.25);
        for &s in &[0.5, 1.0, 2.5] {
            let v = rays.integrate(|t| t.exp() * t.powf(-s)) / Complex64::new(0.0, 2.0 * PI);
            assert!((v.re - crate::special::rgamma(s)).abs() < 1e-12 && v.im.abs() < 1e-12, "s={s}");
        }
    }

    #[test]
    fn hankel_loop_orientation() {
        // encloses the poles of 1/sin(pi w) at 0,1,2,... counter-clockwise
        let rule = GlRule::new(20);
        let l = hankel_loop(&rule, -0.5, 40.0, 0.5, 0.1);
        let v = l.integrate(|w| (-w * w).exp() / w);
        assert!((v - Complex64::new(0.0, 2.0 * PI)).norm() < 1e-10);
    }
}
