//! Assembly of the matrix `K_N` from a kernel.

use std::fmt;

use num_complex::Complex64;

use crate::kernels::{KernelForm, KernelSpec};
use crate::linalg::ComplexMatrix;
use crate::quadrature::{singular_moments, spectral_ops, QuadRule, RuleKind};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Nyström with Gauss–Legendre.
    Ngl,
    /// Nyström with the midpoint rule.
    Rect,
    /// Nyström–Clenshaw–Curtis.
    Ncc,
    /// Product integration against `|x - y|^-alpha`.
    Singular,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Ngl => "ngl",
            Scheme::Rect => "rect",
            Scheme::Ncc => "ncc",
            Scheme::Singular => "singular",
        }
    }

    pub fn parse(s: &str) -> Result<Scheme> {
        match s {
            "ngl" => Ok(Scheme::Ngl),
            "rect" => Ok(Scheme::Rect),
            "ncc" => Ok(Scheme::Ncc),
            "singular" => Ok(Scheme::Singular),
            _ => Err(Error::InvalidInput(format!("unknown scheme `{s}`"))),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub matrix: ComplexMatrix,
    /// Collocation nodes on the kernel domain.
    pub nodes: Vec<f64>,
    /// The quadrature rule for Nyström schemes.
    pub rule: Option<QuadRule>,
    pub scheme: Scheme,
    pub domain: (f64, f64),
    pub zero_diag: bool,
}

impl DiscreteOperator {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }
}

/// `K[i][j] = w_j k(y_i, y_j)`, with the diagonal set to zero if `zero_diag`.
/// Diagonal entries are never evaluated when zeroed.
pub fn assemble_nystrom(spec: &KernelSpec, rule: &QuadRule, zero_diag: bool) -> Result<DiscreteOperator> {
    if let KernelForm::SingularFactored { .. } = spec.form {
        return Err(Error::WrongScheme(format!(
            "kernel `{}` is singular; use the product-integration scheme",
            spec.name
        )));
    }
    check_rule_domain(spec, rule)?;
    let n = rule.len();
    let y = &rule.nodes;
    let mut data = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let v = if zero_diag && i == j {
                0.0
            } else {
                rule.weights[j] * spec.eval(y[i], y[j])?
            };
            data.push(Complex64::new(v, 0.0));
        }
    }
    let scheme = match rule.kind {
        RuleKind::GaussLegendre => Scheme::Ngl,
        RuleKind::Rectangle => Scheme::Rect,
    };
    Ok(DiscreteOperator {
        matrix: ComplexMatrix::new(n, data)?,
        nodes: y.clone(),
        rule: Some(rule.clone()),
        scheme,
        domain: spec.domain,
        zero_diag,
    })
}

fn check_rule_domain(spec: &KernelSpec, rule: &QuadRule) -> Result<()> {
    let (a, b) = spec.domain;
    let tol = 1e-12 * (b - a);
    if (rule.a - a).abs() > tol || (rule.b - b).abs() > tol {
        return Err(Error::InvalidInput(format!(
            "rule on [{}, {}] does not match kernel domain [{a}, {b}]",
            rule.a, rule.b
        )));
    }
    Ok(())
}

/// Nyström–Clenshaw–Curtis assembly on `n` Chebyshev–Lobatto points:
///
/// ```text
/// K_N = (b - a)/2 * (L o K1 + R o K2)
/// ```
///
/// where `L = C Sl C^-1` integrates over `[a, x]` (lower branch `K1`),
/// `R = C Sr C^-1` integrates over `[x, b]` (upper branch `K2`) and `o` is
/// the entrywise product. A smooth kernel is used for both branches.
pub fn assemble_ncc(spec: &KernelSpec, n: usize) -> Result<DiscreteOperator> {
    let (lower, upper) = match &spec.form {
        KernelForm::Smooth(k) => (k, k),
        KernelForm::Split { lower, upper } => (lower, upper),
        KernelForm::SingularFactored { .. } => {
            return Err(Error::WrongScheme(format!(
                "kernel `{}` is singular; NCC needs branches evaluable on the closed square",
                spec.name
            )))
        }
    };
    let ops = spectral_ops(n)?;
    let (a, b) = spec.domain;
    let half = 0.5 * (b - a);
    let x: Vec<f64> = ops.points.iter().map(|t| a + half * (t + 1.0)).collect();
    let l = ops.left_integration();
    let r = ops.right_integration();
    let mut data = Vec::with_capacity(n * n);
    for m in 0..n {
        for j in 0..n {
            let k1 = lower.call(x[m], x[j]);
            let k2 = upper.call(x[m], x[j]);
            if !(k1.is_finite() && k2.is_finite()) {
                return Err(Error::Singularity { x: x[m], y: x[j] });
            }
            data.push(Complex64::new(half * (l[(m, j)] * k1 + r[(m, j)] * k2), 0.0));
        }
    }
    Ok(DiscreteOperator {
        matrix: ComplexMatrix::new(n, data)?,
        nodes: x,
        rule: None,
        scheme: Scheme::Ncc,
        domain: spec.domain,
        zero_diag: false,
    })
}

/// Product-integration assembly for `|x - y|^-alpha h(x, y)` on `n`
/// Chebyshev–Lobatto points: `K[i][j] = w_j(x_i) h(x_i, x_j)` with
/// `w(x)^T = beta(x)^T C^-1`.
pub fn assemble_singular(spec: &KernelSpec, n: usize) -> Result<DiscreteOperator> {
    let (alpha, h) = match &spec.form {
        KernelForm::SingularFactored { alpha, h } => (*alpha, h),
        _ => {
            return Err(Error::WrongScheme(format!(
                "kernel `{}` is not of the form |x-y|^-alpha h(x,y)",
                spec.name
            )))
        }
    };
    let ops = spectral_ops(n)?;
    let (a, b) = spec.domain;
    let half = 0.5 * (b - a);
    let x: Vec<f64> = ops
        .points
        .iter()
        .enumerate()
        .map(|(i, t)| match i {
            0 => a,
            _ if i == n - 1 => b,
            _ => a + half * (t + 1.0),
        })
        .collect();
    let mut data = Vec::with_capacity(n * n);
    for &xi in &x {
        let beta = singular_moments(alpha, xi, n, a, b)?;
        // w_j = sum_k beta_k Cinv[k][j]
        let mut w = vec![0.0; n];
        for (k, bk) in beta.iter().enumerate() {
            for (wj, cj) in w.iter_mut().zip(ops.cinv.row(k)) {
                *wj += bk * cj;
            }
        }
        for (j, &xj) in x.iter().enumerate() {
            let hv = h.call(xi, xj);
            if !hv.is_finite() {
                return Err(Error::Singularity { x: xi, y: xj });
            }
            data.push(Complex64::new(w[j] * hv, 0.0));
        }
    }
    Ok(DiscreteOperator {
        matrix: ComplexMatrix::new(n, data)?,
        nodes: x,
        rule: None,
        scheme: Scheme::Singular,
        domain: spec.domain,
        zero_diag: false,
    })
}

/// Assembles `spec` with `scheme` on `n` nodes.
pub fn assemble(spec: &KernelSpec, scheme: Scheme, n: usize, zero_diag: bool) -> Result<DiscreteOperator> {
    let (a, b) = spec.domain;
    match scheme {
        Scheme::Ngl => assemble_nystrom(spec, &crate::quadrature::gauss_legendre(n, a, b)?, zero_diag),
        Scheme::Rect => assemble_nystrom(spec, &crate::quadrature::rectangle(n, a, b)?, zero_diag),
        Scheme::Ncc => with_zero_diag(assemble_ncc(spec, n)?, zero_diag),
        Scheme::Singular => with_zero_diag(assemble_singular(spec, n)?, zero_diag),
    }
}

fn with_zero_diag(mut op: DiscreteOperator, zero_diag: bool) -> Result<DiscreteOperator> {
    if zero_diag {
        op.matrix = op.matrix.with_zero_diagonal();
        op.zero_diag = true;
    }
    Ok(op)
}
