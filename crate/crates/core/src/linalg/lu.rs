use num_complex::Complex64;

use super::ComplexMatrix;
use crate::{Error, Result};

/// A determinant held as `exp(log_abs) * phase` with `|phase| = 1`.
///
/// `log_abs = -inf` encodes an exactly singular matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDet {
    pub log_abs: f64,
    pub phase: Complex64,
}

impl LogDet {
    pub const ONE: LogDet = LogDet {
        log_abs: 0.0,
        phase: Complex64::new(1.0, 0.0),
    };

    pub fn is_zero(&self) -> bool {
        self.log_abs == f64::NEG_INFINITY
    }

    /// Multiplies by `exp(w)`.
    pub fn mul_exp(self, w: Complex64) -> Self {
        if self.is_zero() {
            return self;
        }
        Self {
            log_abs: self.log_abs + w.re,
            phase: self.phase * Complex64::from_polar(1.0, w.im),
        }
    }

    /// Exponentiates back to a complex number, failing on overflow.
    pub fn value(&self) -> Result<Complex64> {
        if self.is_zero() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        if !self.log_abs.is_finite() || self.log_abs > f64::MAX.ln() {
            return Err(Error::Range(format!(
                "determinant magnitude exp({}) overflows",
                self.log_abs
            )));
        }
        Ok(self.phase * self.log_abs.exp())
    }
}

impl std::ops::Mul for LogDet {
    type Output = LogDet;

    fn mul(self, other: LogDet) -> LogDet {
        if self.is_zero() || other.is_zero() {
            return LogDet {
                log_abs: f64::NEG_INFINITY,
                phase: Complex64::new(1.0, 0.0),
            };
        }
        LogDet {
            log_abs: self.log_abs + other.log_abs,
            phase: self.phase * other.phase,
        }
    }
}

/// `det(I + zA)` in log-magnitude/phase form, via LU with partial pivoting.
pub fn log_det_shifted(a: &ComplexMatrix, z: Complex64) -> LogDet {
    if z == Complex64::new(0.0, 0.0) {
        return LogDet::ONE;
    }
    let n = a.dim();
    let mut m: Vec<Complex64> = a.as_slice().iter().map(|v| v * z).collect();
    for i in 0..n {
        m[i * n + i] += 1.0;
    }
    log_det_in_place(&mut m, n)
}

/// `det(I + zA)`; exactly 1 at `z = 0`.
pub fn det_shifted(a: &ComplexMatrix, z: Complex64) -> Result<Complex64> {
    log_det_shifted(a, z).value()
}

fn log_det_in_place(m: &mut [Complex64], n: usize) -> LogDet {
    let mut log_abs = 0.0;
    let mut phase = Complex64::new(1.0, 0.0);
    for k in 0..n {
        let (p, pmax) = (k..n)
            .map(|i| (i, m[i * n + k].norm()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if pmax == 0.0 {
            return LogDet {
                log_abs: f64::NEG_INFINITY,
                phase: Complex64::new(1.0, 0.0),
            };
        }
        if p != k {
            for j in k..n {
                m.swap(k * n + j, p * n + j);
            }
            phase = -phase;
        }
        let pivot = m[k * n + k];
        log_abs += pmax.ln();
        phase *= pivot / pmax;
        let inv = pivot.inv();
        let (upper, lower) = m.split_at_mut((k + 1) * n);
        let pivot_row = &upper[k * n..(k + 1) * n];
        for row in lower.chunks_exact_mut(n) {
            let f = row[k] * inv;
            if f == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (r, pr) in row[k + 1..].iter_mut().zip(&pivot_row[k + 1..]) {
                *r -= f * pr;
            }
        }
        // keep |phase| = 1 against drift
        if k % 32 == 31 {
            phase /= phase.norm();
        }
    }
    phase /= phase.norm();
    LogDet { log_abs, phase }
}
