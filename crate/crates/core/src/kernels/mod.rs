//! Kernel descriptions and the registry of built-in kernels.

mod expr;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

pub use expr::Expr;

use crate::{Error, Result};

/// A real function of `(x, y)` with a printable label.
#[derive(Clone)]
pub struct KernelFn {
    label: String,
    f: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

impl KernelFn {
    pub fn new(label: impl Into<String>, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            f: Arc::new(f),
        }
    }

    pub fn from_expr(src: &str) -> Result<Self> {
        let e = Expr::parse(src)?;
        Ok(Self::new(e.source().to_string(), move |x, y| e.eval(x, y)))
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("{c}"), move |_, _| c)
    }

    #[inline]
    pub fn call(&self, x: f64, y: f64) -> f64 {
        (self.f)(x, y)
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl fmt::Debug for KernelFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "KernelFn({})", self.label)
    }
}

#[derive(Debug, Clone)]
pub enum KernelForm {
    Smooth(KernelFn),
    /// `lower` applies for `y <= x` (diagonal included), `upper` for `y > x`.
    Split {
        lower: KernelFn,
        upper: KernelFn,
    },
    /// `|x - y|^-alpha h(x, y)`.
    SingularFactored {
        alpha: f64,
        h: KernelFn,
    },
}

#[derive(Debug, Clone)]
pub struct KernelSpec {
    pub name: String,
    pub domain: (f64, f64),
    pub form: KernelForm,
}

impl KernelSpec {
    pub fn new(name: impl Into<String>, domain: (f64, f64), form: KernelForm) -> Result<Self> {
        let (a, b) = domain;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidInput(format!("invalid kernel domain [{a}, {b}]")));
        }
        if let KernelForm::SingularFactored { alpha, .. } = form {
            check_alpha(alpha)?;
        }
        Ok(Self {
            name: name.into(),
            domain,
            form,
        })
    }

    /// Kernel value at `(x, y)`.
    ///
    /// Split kernels use the lower branch on the diagonal. A singular
    /// factored kernel on the diagonal, or any non-finite value, is a
    /// [`Error::Singularity`].
    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        let v = match &self.form {
            KernelForm::Smooth(k) => k.call(x, y),
            KernelForm::Split { lower, upper } => {
                if y <= x {
                    lower.call(x, y)
                } else {
                    upper.call(x, y)
                }
            }
            KernelForm::SingularFactored { alpha, h } => {
                if x == y {
                    return Err(Error::Singularity { x, y });
                }
                (x - y).abs().powf(-alpha) * h.call(x, y)
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Singularity { x, y })
        }
    }

    /// True when the kernel may jump or blow up across `y = x`.
    pub fn is_split(&self) -> bool {
        matches!(self.form, KernelForm::Split { .. })
    }

    pub fn alpha(&self) -> Option<f64> {
        match self.form {
            KernelForm::SingularFactored { alpha, .. } => Some(alpha),
            _ => None,
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::Domain(format!("alpha = {alpha} must lie in [0, 1)")))
    }
}

pub const REGISTRY_NAMES: [&str; 5] = ["green", "bernoulli", "sign", "abs_pow", "abs_pow_iter2"];

/// Built-in kernels. `abs_pow` reads `alpha` from `params` (default 1/2).
pub fn registry(name: &str, params: &BTreeMap<String, f64>) -> Result<KernelSpec> {
    match name {
        "green" => KernelSpec::new(
            name,
            (0.0, 1.0),
            KernelForm::Split {
                lower: KernelFn::new("y*(1-x)", |x, y| y * (1.0 - x)),
                upper: KernelFn::new("x*(1-y)", |x, y| x * (1.0 - y)),
            },
        ),
        "bernoulli" => KernelSpec::new(
            name,
            (0.0, 1.0),
            KernelForm::Smooth(KernelFn::new("1/12 - |x-y|/2 + (x-y)^2/2", |x, y| {
                let d = x - y;
                1.0 / 12.0 - 0.5 * d.abs() + 0.5 * d * d
            })),
        ),
        "sign" => KernelSpec::new(
            name,
            (-1.0, 1.0),
            KernelForm::Split {
                lower: KernelFn::constant(1.0),
                upper: KernelFn::constant(-1.0),
            },
        ),
        "abs_pow" => {
            let alpha = params.get("alpha").copied().unwrap_or(0.5);
            check_alpha(alpha)?;
            KernelSpec::new(
                name,
                (-1.0, 1.0),
                KernelForm::SingularFactored {
                    alpha,
                    h: KernelFn::constant(1.0),
                },
            )
        }
        "abs_pow_iter2" => KernelSpec::new(
            name,
            (-1.0, 1.0),
            KernelForm::Split {
                lower: KernelFn::new("k2 (x > y)", |x, y| abs_pow_iter2(x, y - x)),
                upper: KernelFn::new("k2 (x < y)", |x, y| abs_pow_iter2(x, y - x)),
            },
        ),
        _ => Err(Error::UnknownKernel(name.to_string())),
    }
}

/// Kernel of `K^2` for `K` with kernel `|x - y|^-1/2` on `[-1, 1]`, at
/// `(x, x + d)`.
///
/// ```text
/// x < y:  -ln(2-y-x-2 sqrt((1-y)(1-x))) + pi + ln(2+y+x+2 sqrt((1+y)(1+x)))
/// x > y:  -ln(2+y+x-2 sqrt((1+y)(1+x))) + pi + ln(2-y-x+2 sqrt((1-y)(1-x)))
/// ```
///
/// The cancelling argument is evaluated as a square of a difference of
/// square roots, `(sqrt(1-x) - sqrt(1-y))^2` with the difference written as
/// `d / (sqrt(1-x) + sqrt(1-y))`, so that it keeps full relative accuracy
/// near the diagonal. Taking the offset `d` directly avoids losing it when
/// `|d|` is far below the spacing of floats near `x`. The kernel has a
/// logarithmic singularity on the diagonal and is `+inf` there.
pub fn abs_pow_iter2(x: f64, d: f64) -> f64 {
    let y = x + d;
    let (mx, my) = ((1.0 - x).max(0.0).sqrt(), (1.0 - y).max(0.0).sqrt());
    let (px, py) = ((1.0 + x).max(0.0).sqrt(), (1.0 + y).max(0.0).sqrt());
    if d > 0.0 {
        let small = if mx + my > 0.0 { d / (mx + my) } else { 0.0 };
        -(small * small).ln() + PI + (px + py).powi(2).ln()
    } else {
        let small = if px + py > 0.0 { -d / (px + py) } else { 0.0 };
        -(small * small).ln() + PI + (mx + my).powi(2).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reg(name: &str) -> KernelSpec {
        registry(name, &BTreeMap::new()).unwrap()
    }

    #[test]
    fn registry_values() {
        assert!((reg("green").eval(0.3, 0.7).unwrap() - 0.09).abs() < 1e-15);
        assert!((reg("green").eval(0.7, 0.3).unwrap() - 0.09).abs() < 1e-15);
        for x in [0.0, 0.25, 1.0] {
            assert!((reg("bernoulli").eval(x, x).unwrap() - 1.0 / 12.0).abs() < 1e-15);
        }
        assert_eq!(reg("sign").eval(0.5, 0.2).unwrap(), 1.0);
        assert_eq!(reg("sign").eval(0.2, 0.2).unwrap(), 1.0);
        assert_eq!(reg("sign").eval(0.2, 0.5).unwrap(), -1.0);
        assert!((reg("abs_pow").eval(0.0, 0.25).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn registry_errors() {
        assert!(matches!(
            registry("nope", &BTreeMap::new()),
            Err(Error::UnknownKernel(_))
        ));
        let mut p = BTreeMap::new();
        p.insert("alpha".to_string(), 1.0);
        assert!(matches!(registry("abs_pow", &p), Err(Error::Domain(_))));
        assert!(matches!(reg("abs_pow").eval(0.1, 0.1), Err(Error::Singularity { .. })));
        assert!(matches!(
            reg("abs_pow_iter2").eval(0.1, 0.1),
            Err(Error::Singularity { .. })
        ));
    }

    #[test]
    fn iterated_kernel_matches_rationalized_form() {
        for &(x, y) in &[(-0.9f64, 0.4f64), (0.3, 0.31), (0.5, -0.5), (0.99, -0.99), (-1.0, 1.0)] {
            let ra = 2.0
                * (((1.0 + x).sqrt() + (1.0 + y).sqrt()) * ((1.0 - x).sqrt() + (1.0 - y).sqrt()) / (x - y).abs()).ln()
                + PI;
            let v = reg("abs_pow_iter2").eval(x, y).unwrap();
            assert!((v - ra).abs() < 1e-12 * ra.abs(), "({x},{y}): {v} vs {ra}");
        }
    }

    #[test]
    fn expression_kernels() {
        let spec = KernelSpec::new(
            "user",
            (0.0, 1.0),
            KernelForm::Split {
                lower: KernelFn::from_expr("y*(1-x)").unwrap(),
                upper: KernelFn::from_expr("x*(1-y)").unwrap(),
            },
        )
        .unwrap();
        let g = reg("green");
        for &(x, y) in &[(0.1, 0.9), (0.9, 0.1), (0.5, 0.5)] {
            assert_eq!(spec.eval(x, y).unwrap(), g.eval(x, y).unwrap());
        }
        assert!(KernelSpec::new("bad", (1.0, 0.0), KernelForm::Smooth(KernelFn::constant(1.0))).is_err());
    }
}
