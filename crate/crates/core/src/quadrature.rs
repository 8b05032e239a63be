//! Quadrature rules and Chebyshev spectral integration.

use std::f64::consts::PI;

use crate::linalg::RealMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    GaussLegendre,
    /// Midpoint rule.
    Rectangle,
}

/// Nodes and weights on `[a, b]`, nodes strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    pub kind: RuleKind,
    pub a: f64,
    pub b: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

fn check_interval(n: usize, a: f64, b: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidInput("rule needs at least one node".into()));
    }
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::InvalidInput(format!("invalid interval [{a}, {b}]")));
    }
    Ok(())
}

/// Legendre polynomial `P_n(x)` and its derivative by the three-term
/// recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// `n`-point Gauss–Legendre rule on `[a, b]`.
///
/// Nodes come from Newton's method on the Legendre recurrence started at
/// the asymptotic guesses `cos(pi (i - 1/4) / (n + 1/2))`; weights are
/// `2 / ((1 - x^2) P_n'(x)^2)`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Result<QuadRule> {
    check_interval(n, a, b)?;
    let mut x_std = vec![0.0; n];
    let mut w_std = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut converged = false;
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= 1e-15 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NoConvergence {
                what: "Gauss-Legendre node",
                iterations: 100,
            });
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // guesses run from the right end towards the middle
        x_std[n - 1 - i] = x;
        w_std[n - 1 - i] = w;
        x_std[i] = -x;
        w_std[i] = w;
    }
    if n % 2 == 1 {
        x_std[n / 2] = 0.0;
    }
    let (mid, half_len) = (0.5 * (a + b), 0.5 * (b - a));
    Ok(QuadRule {
        kind: RuleKind::GaussLegendre,
        a,
        b,
        nodes: x_std.iter().map(|x| mid + half_len * x).collect(),
        weights: w_std.iter().map(|w| half_len * w).collect(),
    })
}

/// `n`-point midpoint rule on `[a, b]`.
pub fn rectangle(n: usize, a: f64, b: f64) -> Result<QuadRule> {
    check_interval(n, a, b)?;
    let h = (b - a) / n as f64;
    Ok(QuadRule {
        kind: RuleKind::Rectangle,
        a,
        b,
        nodes: (0..n).map(|j| a + (j as f64 + 0.5) * h).collect(),
        weights: vec![h; n],
    })
}

/// Chebyshev–Lobatto points on `[-1, 1]` in ascending order.
pub fn chebyshev_lobatto(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    (0..n)
        .map(|m| {
            // symmetric evaluation keeps the middle point exactly zero
            let k = n - 1 - m;
            if 2 * k == n - 1 {
                0.0
            } else {
                (PI * k as f64 / (n - 1) as f64).cos()
            }
        })
        .collect()
}

/// `T_0(x), ..., T_{n-1}(x)`.
pub fn chebyshev_values(x: f64, n: usize) -> Vec<f64> {
    let mut t = Vec::with_capacity(n);
    if n == 0 {
        return t;
    }
    t.push(1.0);
    if n == 1 {
        return t;
    }
    t.push(x);
    for k in 2..n {
        t.push(2.0 * x * t[k - 1] - t[k - 2]);
    }
    t
}

/// Chebyshev interpolation and spectral integration on `n` Lobatto points.
///
/// `c[(m, k)] = T_k(x_m)`. `sl` and `sr` act on coefficient vectors and map
/// the coefficients of `q` to those of `int_{-1}^x q` and `int_x^1 q`; the
/// `T_n` term of the antiderivative is dropped, so they are exact up to
/// degree `n - 2`.
#[derive(Debug, Clone)]
pub struct SpectralOps {
    pub n: usize,
    pub points: Vec<f64>,
    pub c: RealMatrix,
    pub cinv: RealMatrix,
    pub sl: RealMatrix,
    pub sr: RealMatrix,
}

impl SpectralOps {
    /// `C Sl C^-1`: samples of `q` to samples of `int_{-1}^x q`.
    pub fn left_integration(&self) -> RealMatrix {
        self.c.matmul(&self.sl).matmul(&self.cinv)
    }

    /// `C Sr C^-1`: samples of `q` to samples of `int_x^1 q`.
    pub fn right_integration(&self) -> RealMatrix {
        self.c.matmul(&self.sr).matmul(&self.cinv)
    }
}

pub fn spectral_ops(n: usize) -> Result<SpectralOps> {
    if n < 2 {
        return Err(Error::InvalidInput("spectral operators need n >= 2".into()));
    }
    let points = chebyshev_lobatto(n);
    let rows: Vec<Vec<f64>> = points
        .iter()
        .map(|&x| chebyshev_values(x.clamp(-1.0, 1.0), n))
        .collect();
    let c = RealMatrix::from_fn(n, |m, k| rows[m][k]);
    let cinv = c.inverse()?;

    // antiderivative coefficients of each T_k, truncated to n terms
    let mut anti = vec![vec![0.0; n]; n];
    for (k, b) in anti.iter_mut().enumerate() {
        let mut put = |idx: usize, v: f64| {
            if idx < n {
                b[idx] += v;
            }
        };
        match k {
            0 => put(1, 1.0),
            1 => put(2, 0.25),
            _ => {
                put(k + 1, 0.5 / (k as f64 + 1.0));
                put(k - 1, -0.5 / (k as f64 - 1.0));
            }
        }
    }
    let mut sl = vec![0.0; n * n];
    let mut sr = vec![0.0; n * n];
    for (k, b) in anti.iter().enumerate() {
        // value of the non-constant part at -1 and at +1
        let at_minus: f64 = (1..n).map(|j| if j % 2 == 0 { b[j] } else { -b[j] }).sum();
        let at_plus: f64 = b[1..].iter().sum();
        sl[k] = -at_minus;
        sr[k] = at_plus;
        for j in 1..n {
            sl[j * n + k] = b[j];
            sr[j * n + k] = -b[j];
        }
    }
    Ok(SpectralOps {
        n,
        points,
        c,
        cinv,
        sl: RealMatrix::from_fn(n, |i, j| sl[i * n + j]),
        sr: RealMatrix::from_fn(n, |i, j| sr[i * n + j]),
    })
}

/// `beta_j(x) = int_a^b |x - y|^-alpha T_j(yhat) dy` for `j = 0..n-1`, with
/// `yhat` the affine image of `y` in `[-1, 1]`.
///
/// Each side of `x` is mapped by `d = L s^(1/(1-alpha))`, which cancels the
/// singular factor exactly; the remaining smooth integrand is integrated by
/// Gauss–Legendre on geometrically graded panels in `s`.
pub fn singular_moments(alpha: f64, x: f64, n: usize, a: f64, b: f64) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Domain(format!(
            "singularity exponent alpha = {alpha} must lie in [0, 1)"
        )));
    }
    check_interval(n, a, b)?;
    if !(a..=b).contains(&x) {
        return Err(Error::InvalidInput(format!("x = {x} outside [{a}, {b}]")));
    }
    let q = 1.0 / (1.0 - alpha);
    let scale = 2.0 / (b - a);
    let to_hat = |y: f64| ((y - a) * scale - 1.0).clamp(-1.0, 1.0);

    // For integer q the integrand is a polynomial of degree q (n-1) in s and
    // one panel is exact.
    let integer_q = (q - q.round()).abs() < 1e-12;
    let panels = panel_layout(n, q, integer_q);

    let mut beta = vec![0.0; n];
    for (len, sign) in [(x - a, -1.0), (b - x, 1.0)] {
        if len <= 0.0 {
            continue;
        }
        let factor = len.powf(1.0 - alpha) * q;
        for &(lo, hi, pts) in &panels {
            let rule = gauss_legendre(pts, lo, hi)?;
            for (&s, &w) in rule.nodes.iter().zip(&rule.weights) {
                let y = x + sign * len * s.powf(q);
                let t = chebyshev_values(to_hat(y), n);
                for (bj, tj) in beta.iter_mut().zip(&t) {
                    *bj += factor * w * tj;
                }
            }
        }
    }
    Ok(beta)
}

fn panel_layout(n: usize, q: f64, integer_q: bool) -> Vec<(f64, f64, usize)> {
    if integer_q {
        let degree = q.round() as usize * n.saturating_sub(1);
        return vec![(0.0, 1.0, degree / 2 + 2)];
    }
    const LEVELS: i32 = 40;
    let mut panels = Vec::with_capacity(LEVELS as usize + 1);
    let mut hi: f64 = 1.0;
    for level in 0..LEVELS {
        let lo = 0.5f64.powi(level + 1);
        // the polynomial content shrinks like (hi)^q on deeper panels
        let active = (q * (n.max(1) as f64) * hi.powf(q)).ceil() as usize;
        panels.push((lo, hi, 12 + active));
        hi = lo;
    }
    panels.push((0.0, hi, 12));
    panels
}
