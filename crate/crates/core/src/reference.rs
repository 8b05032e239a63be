//! Closed-form determinants of the built-in kernels.
//!
//! Values are in the orientation `d_p(z) = det_p(I - zK)`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::determinants::det_from_eigs;
use crate::discretize::assemble_singular;
use crate::kernels::{abs_pow_iter2, registry};
use crate::linalg::eigenvalues;
use crate::quadrature::gauss_legendre;
use crate::{Error, Result};

/// `sum_k c_k z^k` for an even function of `s = sqrt(z)`, summed until the
/// terms vanish.
fn even_series(z: Complex64, first: f64, ratio: impl Fn(usize) -> f64) -> Complex64 {
    let mut term = Complex64::new(first, 0.0);
    let mut sum = term;
    for k in 1..60 {
        term *= z * ratio(k);
        sum += term;
        if term.norm() <= 1e-17 * sum.norm() {
            break;
        }
    }
    sum
}

/// `sin(sqrt z) / sqrt z`, the determinant of the Green's function kernel
/// of `-u''` on `[0, 1]` with Dirichlet conditions.
pub fn green_det(z: Complex64) -> Complex64 {
    if z.norm() < 1.0 {
        // sum (-z)^k / (2k+1)!
        return even_series(z, 1.0, |k| -1.0 / ((2 * k) * (2 * k + 1)) as f64);
    }
    let s = z.sqrt();
    s.sin() / s
}

/// `(2 - 2 cos sqrt z) / z`, the determinant of the periodic Bernoulli
/// kernel.
pub fn bernoulli_det(z: Complex64) -> Complex64 {
    if z.norm() < 1.0 {
        // 2 sum_{k>=0} (-z)^k / (2k+2)!
        return even_series(z, 1.0, |k| -1.0 / ((2 * k + 1) * (2 * k + 2)) as f64);
    }
    let s = z.sqrt();
    (2.0 - 2.0 * s.cos()) / z
}

/// `cosh(2z)`, the 2-modified determinant of the sign kernel on `[-1, 1]`.
pub fn sign_det2(z: Complex64) -> Complex64 {
    (2.0 * z).cosh()
}

/// `(cosh(4z) + 1) / 2 = det(I - z^2 K^2)` for the sign kernel.
pub fn sign_det_sq(z: Complex64) -> Complex64 {
    0.5 * ((4.0 * z).cosh() + 1.0)
}

/// Known `tr K^j`, `j = 1, 2, ...` (`None` where the trace diverges).
fn known_traces(name: &str) -> Option<(usize, Vec<Option<f64>>)> {
    match name {
        "green" => Some((1, vec![Some(1.0 / 6.0), Some(1.0 / 90.0), Some(1.0 / 945.0)])),
        "bernoulli" => Some((1, vec![Some(1.0 / 12.0), Some(1.0 / 720.0), Some(1.0 / 30240.0)])),
        "sign" => Some((2, vec![None, Some(-4.0), Some(0.0)])),
        _ => None,
    }
}

/// Names accepted by [`analytic_det`].
pub const ANALYTIC_NAMES: [&str; 4] = ["green", "bernoulli", "sign", "abs_pow_iter2"];

/// `det_p(I - zK)` for a built-in kernel.
///
/// Plain determinants are converted with
/// `det_p(I - zK) = det_q(I - zK) exp( sum_{q<=j<p} z^j tr(K^j) / j )`.
/// For `abs_pow_iter2` the returned value is `det_2(I - z K_2)` with `K_2`
/// the iterated kernel, which only exists for `p = 2`.
pub fn analytic_det(name: &str, p: usize, z: Complex64) -> Result<Complex64> {
    if name == "abs_pow_iter2" {
        if p != 2 {
            return Err(Error::InvalidInput(format!(
                "reference for abs_pow_iter2 exists for p = 2 only, got p = {p}"
            )));
        }
        return abs_pow_iter2_det2(z);
    }
    let (base_p, traces) =
        known_traces(name).ok_or_else(|| Error::InvalidInput(format!("no analytic reference for kernel `{name}`")))?;
    if p < base_p {
        return Err(Error::InvalidInput(format!(
            "det_{p} of `{name}` diverges; use p >= {base_p}"
        )));
    }
    let base = match name {
        "green" => green_det(z),
        "bernoulli" => bernoulli_det(z),
        _ => sign_det2(z),
    };
    let mut w = Complex64::new(0.0, 0.0);
    let mut zj = Complex64::new(1.0, 0.0);
    for j in 1..p {
        zj *= z;
        if j < base_p {
            continue;
        }
        let t = traces
            .get(j - 1)
            .copied()
            .flatten()
            .ok_or_else(|| Error::InvalidInput(format!("tr K^{j} of `{name}` is not tabulated")))?;
        w += zj * t / j as f64;
    }
    Ok(base * w.exp())
}

/// `tr K^4 = iint k_2(x, y)^2 dx dy` for `K` the `|x - y|^-1/2` operator.
///
/// By symmetry this is `2 int dx int_0^{1-x} k_2(x, x+t)^2 dt`; the outer
/// variable is `x = -cos(pi s)` and the inner `t = (1 - x) r^4`, which
/// tames the endpoint square roots and the logarithmic diagonal.
pub fn abs_pow_trace4(order: usize) -> Result<f64> {
    let outer = gauss_legendre(order, 0.0, 1.0)?;
    let inner = gauss_legendre(order, 0.0, 1.0)?;
    let mut total = 0.0;
    for (&s, &ws) in outer.nodes.iter().zip(&outer.weights) {
        let x = -(PI * s).cos();
        let dx = PI * (PI * s).sin();
        // 1 - x computed without cancellation near x = 1
        let len = 2.0 * (0.5 * PI * (1.0 - s)).sin().powi(2);
        let mut acc = 0.0;
        for (&r, &wr) in inner.nodes.iter().zip(&inner.weights) {
            let t = len * r.powi(4);
            let k = abs_pow_iter2(x, t);
            acc += wr * k * k * 4.0 * len * r.powi(3);
        }
        total += ws * dx * acc;
    }
    Ok(2.0 * total)
}

struct IterReference {
    /// Squares of the eigenvalues of the singular assembly.
    mu2: Vec<Complex64>,
    /// `tr K^4` minus the fourth power sum of the retained eigenvalues.
    tail4: f64,
}

/// Matrix size of the product-integration assembly behind the
/// `abs_pow_iter2` reference.
pub const ITER_REFERENCE_N: usize = 256;

fn iter_reference() -> Result<&'static IterReference> {
    static CELL: OnceLock<std::result::Result<IterReference, Error>> = OnceLock::new();
    CELL.get_or_init(|| {
        let spec = registry("abs_pow", &Default::default())?;
        let op = assemble_singular(&spec, ITER_REFERENCE_N)?;
        let eigs = eigenvalues(&op.matrix)?;
        let mu2: Vec<Complex64> = eigs.iter().map(|l| l * l).collect();
        let sum4: f64 = mu2.iter().map(|m| (m * m).re).sum();
        let tail4 = abs_pow_trace4(200)? - sum4;
        Ok(IterReference { mu2, tail4 })
    })
    .as_ref()
    .map_err(Clone::clone)
}

/// `det_2(I - w K^2)` for the `|x - y|^-1/2` operator: the product over
/// the eigenvalues of a fine product-integration assembly, with the
/// missing `tr K^4` mass restored as `exp(-w^2 tail / 2)`.
pub fn abs_pow_iter2_det2(w: Complex64) -> Result<Complex64> {
    let r = iter_reference()?;
    let prod = det_from_eigs(&r.mu2, 2, -w).value;
    Ok(prod * (-0.5 * w * w * r.tail4).exp())
}
