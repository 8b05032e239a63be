//! p-modified determinants of a matrix by three independent routes.
//!
//! Every routine computes `det_p(I + zK)`:
//!
//! ```text
//! det_p(I + zK) = det(I + zK) exp( sum_{j=1}^{p-1} (-z)^j tr(K^j) / j )
//! ```

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::discretize::DiscreteOperator;
use crate::linalg::{log_det_shifted, trace_powers, ComplexMatrix, LogDet};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Route {
    LuTrace,
    Series,
    EigProduct,
}

impl Route {
    pub fn name(self) -> &'static str {
        match self {
            Route::LuTrace => "lu_trace",
            Route::Series => "series",
            Route::EigProduct => "eig_product",
        }
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetValue {
    pub z: Complex64,
    pub p: usize,
    pub value: Complex64,
    pub route: Route,
}

/// Plemelj–Smithies coefficients: `det_p(I + zK) = sum_n coeffs[n] z^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DetSeries {
    pub p: usize,
    pub coeffs: Vec<Complex64>,
    /// `traces[j - 1] = nu_j`, zero for `j < p`.
    pub traces: Vec<Complex64>,
}

fn check_p(p: usize) -> Result<()> {
    if p == 0 {
        return Err(Error::InvalidInput("determinant order p must be at least 1".into()));
    }
    Ok(())
}

/// `sum_{j=1}^{p-1} (-z)^j t_j / j` with `t_j = traces[j - 1]`.
fn trace_correction(traces: &[Complex64], p: usize, z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    let mut zj = Complex64::new(1.0, 0.0);
    for (j, t) in traces.iter().enumerate().take(p - 1) {
        zj *= -z;
        acc += zj * t / (j + 1) as f64;
    }
    acc
}

/// `det_p(I + zA)` in log form.
pub fn log_det_p(a: &ComplexMatrix, p: usize, z: Complex64) -> Result<LogDet> {
    check_p(p)?;
    if z == Complex64::new(0.0, 0.0) {
        return Ok(LogDet::ONE);
    }
    let ld = log_det_shifted(a, z);
    if p == 1 {
        return Ok(ld);
    }
    let w = trace_correction(&trace_powers(a, p - 1), p, z);
    if !(w.re.is_finite() && w.im.is_finite()) {
        return Err(Error::Range(format!("trace correction overflows at z = {z}")));
    }
    Ok(ld.mul_exp(w))
}

/// `det_p(I + zA)` by LU and the trace correction.
pub fn det_p_matrix(a: &ComplexMatrix, p: usize, z: Complex64) -> Result<Complex64> {
    log_det_p(a, p, z)?.value()
}

pub fn det_p(op: &DiscreteOperator, p: usize, z: Complex64) -> Result<DetValue> {
    Ok(DetValue {
        z,
        p,
        value: det_p_matrix(&op.matrix, p, z)?,
        route: Route::LuTrace,
    })
}

/// The Newton identities
///
/// ```text
/// alpha_0 = 1,   alpha_n = (1/n) sum_{m=1}^{n} (-1)^{m+1} nu_m alpha_{n-m}
/// ```
///
/// for `n = 1..=n_max`, with `nu[m - 1] = nu_m` (missing entries are zero).
///
/// When `nu_m` grows like `rho^m` the rounding error in `alpha_n` grows like
/// `eps rho^n` while the true coefficients may decay factorially, so long
/// recursions are only reliable for `rho |z| < 1`.
pub fn plemelj_recursion(nu: &[Complex64], n_max: usize) -> Vec<Complex64> {
    let mut coeffs = Vec::with_capacity(n_max + 1);
    coeffs.push(Complex64::new(1.0, 0.0));
    for n in 1..=n_max {
        let mut s = Complex64::new(0.0, 0.0);
        for m in 1..=n.min(nu.len()) {
            let term = nu[m - 1] * coeffs[n - m];
            if m % 2 == 1 {
                s += term;
            } else {
                s -= term;
            }
        }
        coeffs.push(s / n as f64);
    }
    coeffs
}

/// Plemelj–Smithies coefficients `alpha_0..=alpha_{n_max}` of
/// `det_p(I + zA)`.
///
/// For `p = 1` this is [`plemelj_recursion`] on `nu_m = tr(A^m)`. For
/// `p >= 2` the same numbers are formed as the Cauchy product of the
/// terminating `p = 1` coefficients (degree `n`) with the Taylor
/// coefficients of `exp( sum_{j<p} (-z)^j nu_j / j )`; running the
/// recursion directly with `nu_j = 0` for `j < p` is equivalent in exact
/// arithmetic but unstable once the series must be summed past degree `n`.
pub fn plemelj_coeffs_matrix(a: &ComplexMatrix, p: usize, n_max: usize) -> Result<DetSeries> {
    check_p(p)?;
    let n = a.dim();
    let zero = Complex64::new(0.0, 0.0);
    if p == 1 {
        let traces = if n_max == 0 { Vec::new() } else { trace_powers(a, n_max) };
        let coeffs = plemelj_recursion(&traces, n_max);
        return Ok(DetSeries { p, coeffs, traces });
    }
    let mut traces = trace_powers(a, n.max(p - 1));
    let base = plemelj_recursion(&traces, n.min(n_max));
    // g_j = (-1)^j nu_j / j and e = exp(g) by k e_k = sum_j j g_j e_{k-j}
    let g: Vec<Complex64> = (1..p)
        .map(|j| {
            let t = traces[j - 1] / j as f64;
            if j % 2 == 1 {
                -t
            } else {
                t
            }
        })
        .collect();
    let mut e = Vec::with_capacity(n_max + 1);
    e.push(Complex64::new(1.0, 0.0));
    for k in 1..=n_max {
        let mut s = zero;
        for j in 1..=k.min(p - 1) {
            s += g[j - 1] * (j as f64) * e[k - j];
        }
        e.push(s / k as f64);
    }
    let coeffs = (0..=n_max)
        .map(|k| (0..=k.min(base.len() - 1)).map(|i| base[i] * e[k - i]).sum())
        .collect();
    for t in traces.iter_mut().take(p - 1) {
        *t = zero;
    }
    Ok(DetSeries { p, coeffs, traces })
}

pub fn plemelj_coeffs(op: &DiscreteOperator, p: usize, n_max: usize) -> Result<DetSeries> {
    plemelj_coeffs_matrix(&op.matrix, p, n_max)
}

/// Horner evaluation of the series at `z`.
pub fn det_series_eval(series: &DetSeries, z: Complex64) -> DetValue {
    let value = series
        .coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c);
    DetValue {
        z,
        p: series.p,
        value,
        route: Route::Series,
    }
}

/// Truncation order for the series route.
///
/// For `p = 1` the series of an `n x n` matrix is a polynomial of degree
/// `n`. For `p >= 2` it is entire but not polynomial; the order is raised
/// in steps of 40 (at most 400) until a crude bound on the tail at
/// `|z| = radius` drops below `e^-40`.
pub fn series_order(a: &ComplexMatrix, p: usize, radius: f64) -> usize {
    let n = a.dim();
    if p <= 1 {
        return n;
    }
    // crude bound on the spectral radius
    let rho = a.max_row_sum();
    let x = radius * rho;
    let q = (p - 1) as f64;
    let mut m = n + 40;
    while m < 400 {
        // the exponential factor has order p - 1: coefficients decay like
        // x^m / (m/q)!^q
        let mf = m as f64;
        let log_tail = mf * (2.0 * x).max(1e-300).ln() - mf * ((mf / q).ln() - 1.0);
        if log_tail < -40.0 {
            break;
        }
        m += 40;
    }
    m.min(400)
}

/// Series route with [`series_order`] terms, evaluated at `z`.
pub fn det_series_at(a: &ComplexMatrix, p: usize, z: Complex64) -> Result<DetValue> {
    let series = plemelj_coeffs_matrix(a, p, series_order(a, p, z.norm()))?;
    Ok(det_series_eval(&series, z))
}

/// `prod_k (1 + z l_k) exp( sum_{j=1}^{p-1} (-z l_k)^j / j )` over the
/// supplied eigenvalues.
pub fn det_from_eigs(eigs: &[Complex64], p: usize, z: Complex64) -> DetValue {
    let mut acc = LogDet::ONE;
    let mut w = Complex64::new(0.0, 0.0);
    for &l in eigs {
        let f = 1.0 + z * l;
        let r = f.norm();
        if r == 0.0 {
            return DetValue {
                z,
                p,
                value: Complex64::new(0.0, 0.0),
                route: Route::EigProduct,
            };
        }
        acc.log_abs += r.ln();
        acc.phase *= f / r;
        let mut t = Complex64::new(1.0, 0.0);
        for j in 1..p {
            t *= -z * l;
            w += t / j as f64;
        }
    }
    acc.phase /= acc.phase.norm();
    let value = acc.mul_exp(w).value().unwrap_or(Complex64::new(f64::INFINITY, 0.0));
    DetValue {
        z,
        p,
        value,
        route: Route::EigProduct,
    }
}

pub const IDENTITY_NAMES: [&str; 3] = ["det1_sq_vs_det2_pair", "det2_sq_vs_det3_pair", "det2_sq_vs_det4_pair"];

/// Residuals `|L - R| / (|L| + |R| + 1)` of
///
/// ```text
/// det_1(I - z^2 A^2) = det_2(I - zA) det_2(I + zA)
/// det_2(I - z^2 A^2) = det_3(I - zA) det_3(I + zA)
/// det_2(I - z^2 A^2) = det_4(I - zA) det_4(I + zA)
/// ```
pub fn identity_residuals(a: &ComplexMatrix, z: Complex64) -> Result<BTreeMap<&'static str, f64>> {
    let a2 = a.matmul(a);
    let w = -z * z;
    let lhs1 = det_p_matrix(&a2, 1, w)?;
    let lhs2 = det_p_matrix(&a2, 2, w)?;
    let pair = |p: usize| -> Result<Complex64> { Ok(det_p_matrix(a, p, -z)? * det_p_matrix(a, p, z)?) };
    let rel = |l: Complex64, r: Complex64| (l - r).norm() / (l.norm() + r.norm() + 1.0);
    let mut out = BTreeMap::new();
    out.insert(IDENTITY_NAMES[0], rel(lhs1, pair(2)?));
    out.insert(IDENTITY_NAMES[1], rel(lhs2, pair(3)?));
    out.insert(IDENTITY_NAMES[2], rel(lhs2, pair(4)?));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn scalar(l: Complex64) -> ComplexMatrix {
        ComplexMatrix::new(1, vec![l]).unwrap()
    }

    #[test]
    fn z_zero_gives_one() {
        let a = ComplexMatrix::from_real(2, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        for p in 1..5 {
            assert_eq!(det_p_matrix(&a, p, c(0.0, 0.0)).unwrap(), c(1.0, 0.0));
        }
        assert!(det_p_matrix(&a, 0, c(1.0, 0.0)).is_err());
    }

    #[test]
    fn scalar_det2() {
        let (l, z) = (c(0.4, -0.2), c(1.3, 0.5));
        let want = (1.0 + z * l) * (-z * l).exp();
        assert!((det_p_matrix(&scalar(l), 2, z).unwrap() - want).norm() < 1e-15);
        assert!((det_from_eigs(&[l], 2, z).value - want).norm() < 1e-15);
    }

    #[test]
    fn empty_eigen_product() {
        for p in 1..4 {
            assert_eq!(det_from_eigs(&[], p, c(3.0, 1.0)).value, c(1.0, 0.0));
        }
    }

    #[test]
    fn scalar_series() {
        let k = c(0.7, 0.1);
        let s = plemelj_coeffs_matrix(&scalar(k), 1, 5).unwrap();
        assert_eq!(s.coeffs[0], c(1.0, 0.0));
        assert!((s.coeffs[1] - k).norm() < 1e-16);
        for v in &s.coeffs[2..] {
            assert!(v.norm() < 1e-16);
        }
        let s2 = plemelj_coeffs_matrix(&scalar(k), 2, 5).unwrap();
        assert_eq!(s2.coeffs[1], c(0.0, 0.0));
        assert_eq!(s2.traces[0], c(0.0, 0.0));
        let z = c(0.3, 0.2);
        assert!((det_series_eval(&s, z).value - (1.0 + z * k)).norm() < 1e-15);
    }

    #[test]
    fn factorized_series_matches_literal_recursion() {
        let a = ComplexMatrix::from_fn(4, |i, j| c(0.1 / (1 + i + j) as f64, 0.02 * (i as f64 - j as f64))).unwrap();
        for p in 2..=4 {
            let s = plemelj_coeffs_matrix(&a, p, 30).unwrap();
            let mut nu = trace_powers(&a, 30);
            for t in nu.iter_mut().take(p - 1) {
                *t = c(0.0, 0.0);
            }
            let literal = plemelj_recursion(&nu, 30);
            for (x, y) in s.coeffs.iter().zip(&literal) {
                assert!((x - y).norm() < 1e-15, "p={p}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn sign_eigen_product_approaches_cosh() {
        let mut eigs = Vec::new();
        for n in 0..10_000 {
            let l = c(0.0, -(4.0 / std::f64::consts::PI) / (2 * n + 1) as f64);
            eigs.push(l);
            eigs.push(l.conj());
        }
        let v = det_from_eigs(&eigs, 2, c(1.0, 0.0)).value;
        assert!((v - c(2f64.cosh(), 0.0)).norm() < 1e-3);
    }

    #[test]
    fn identities_scalar_and_zero() {
        let z = c(0.9, -0.4);
        for r in identity_residuals(&scalar(c(0.6, 0.3)), z).unwrap().values() {
            assert!(*r <= 1e-15, "{r}");
        }
        for r in identity_residuals(&ComplexMatrix::zeros(4).unwrap(), z)
            .unwrap()
            .values()
        {
            assert_eq!(*r, 0.0);
        }
    }
}
