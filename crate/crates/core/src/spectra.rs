//! Eigenvalues as reciprocal determinant zeros, and convergence-order fits.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::determinants::log_det_p;
use crate::discretize::DiscreteOperator;
use crate::{Error, Result};

/// A located zero of `z -> det_p(I + sign z K)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenEstimate {
    pub z_root: Complex64,
    /// The operator eigenvalue `-sign / z_root`.
    pub lambda: Complex64,
    /// `|d(z_root)|`.
    pub residual: f64,
    /// Winding number of the smallest isolating disc.
    pub mult_estimate: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disc {
    pub center: Complex64,
    pub radius: f64,
}

impl Disc {
    pub fn new(center: Complex64, radius: f64) -> Self {
        Self { center, radius }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        (z - self.center).norm() <= self.radius
    }

    fn point(&self, t: f64) -> Complex64 {
        self.center + Complex64::from_polar(self.radius, TAU * t)
    }
}

const MAX_SAMPLES: usize = 1 << 16;
/// `|f|` below this fraction of its contour maximum counts as a zero on the
/// contour.
const CONTOUR_GUARD: f64 = 1e-11;

fn eval_checked(f: &impl Fn(Complex64) -> Complex64, z: Complex64) -> Result<Complex64> {
    let v = f(z);
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { z })
    }
}

fn winding(vals: &[Complex64]) -> (f64, f64) {
    let m = vals.len();
    let mut total = 0.0;
    let mut max_step: f64 = 0.0;
    for k in 0..m {
        let step = (vals[(k + 1) % m] / vals[k]).arg();
        total += step;
        max_step = max_step.max(step.abs());
    }
    (total / TAU, max_step)
}

/// Winding number of `f` around the circle `|z - center| = radius`.
///
/// The number of samples starts at `samples` and doubles until two
/// consecutive counts agree with every phase increment below one radian.
pub fn count_zeros(
    f: impl Fn(Complex64) -> Complex64,
    center: Complex64,
    radius: f64,
    samples: usize,
) -> Result<usize> {
    count_zeros_scaled(&f, Disc::new(center, radius), samples).map(|(n, _)| n)
}

/// As [`count_zeros`], also returning `max |f|` over the final samples.
fn count_zeros_scaled(f: &impl Fn(Complex64) -> Complex64, disc: Disc, samples: usize) -> Result<(usize, f64)> {
    if samples < 64 {
        return Err(Error::InvalidInput(format!(
            "need at least 64 contour samples, got {samples}"
        )));
    }
    if !(disc.radius > 0.0 && disc.radius.is_finite()) {
        return Err(Error::InvalidInput(format!("invalid contour radius {}", disc.radius)));
    }
    let mut m = samples;
    let mut vals = (0..m)
        .map(|k| eval_checked(f, disc.point(k as f64 / m as f64)))
        .collect::<Result<Vec<_>>>()?;
    let mut prev: Option<f64> = None;
    loop {
        let scale = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if let Some((k, _)) = vals.iter().enumerate().find(|(_, v)| v.norm() <= CONTOUR_GUARD * scale) {
            return Err(Error::ZeroOnContour {
                z: disc.point(k as f64 / m as f64),
            });
        }
        let (w, max_step) = winding(&vals);
        let count = w.round();
        if prev == Some(count) && max_step < 1.0 {
            if count < 0.0 {
                return Err(Error::InvalidInput("function has poles inside the contour".into()));
            }
            return Ok((count as usize, scale));
        }
        prev = Some(count);
        if 2 * m > MAX_SAMPLES {
            return Err(Error::NoConvergence {
                what: "argument-principle phase sum",
                iterations: m,
            });
        }
        let mut finer = Vec::with_capacity(2 * m);
        for (k, v) in vals.iter().enumerate() {
            finer.push(*v);
            finer.push(eval_checked(f, disc.point((2 * k + 1) as f64 / (2 * m) as f64))?);
        }
        vals = finer;
        m *= 2;
    }
}

const MAX_NEWTON: usize = 50;

/// Newton's method with a central-difference derivative and backtracking.
///
/// Returns the estimate and the residual `|f|` after every accepted step,
/// starting with `|f(z0)|`.
pub fn refine_zero_traced(
    f: impl Fn(Complex64) -> Complex64,
    z0: Complex64,
    tol: f64,
) -> Result<(EigenEstimate, Vec<f64>)> {
    let mut z = z0;
    let mut fz = eval_checked(&f, z)?;
    let mut history = vec![fz.norm()];
    let done = |z: Complex64, fz: Complex64, history: Vec<f64>| {
        let est = EigenEstimate {
            z_root: z,
            lambda: z.inv(),
            residual: fz.norm(),
            mult_estimate: 1,
        };
        Ok((est, history))
    };
    for _ in 0..MAX_NEWTON {
        if fz.norm() == 0.0 {
            return done(z, fz, history);
        }
        let h = 1e-6 * (1.0 + z.norm());
        let d = (eval_checked(&f, z + h)? - eval_checked(&f, z - h)?) / (2.0 * h);
        if d.norm() == 0.0 || !d.re.is_finite() || !d.im.is_finite() {
            return done(z, fz, history);
        }
        let mut dz = -fz / d;
        let mut accepted = None;
        for _ in 0..40 {
            let trial = z + dz;
            if trial.norm() > 1e6 {
                return Err(Error::RefineFailed {
                    last: trial,
                    reason: "iterate diverged",
                });
            }
            let ft = eval_checked(&f, trial)?;
            if ft.norm() < fz.norm() {
                accepted = Some((trial, ft));
                break;
            }
            dz *= 0.5;
            if dz.norm() <= f64::EPSILON * z.norm() {
                break;
            }
        }
        let Some((next, fnext)) = accepted else {
            // no decrease possible at working precision
            return done(z, fz, history);
        };
        let step = (next - z).norm();
        z = next;
        fz = fnext;
        history.push(fz.norm());
        if step <= tol {
            return done(z, fz, history);
        }
    }
    Err(Error::RefineFailed {
        last: z,
        reason: "iteration cap reached",
    })
}

pub fn refine_zero(f: impl Fn(Complex64) -> Complex64, z0: Complex64, tol: f64) -> Result<EigenEstimate> {
    refine_zero_traced(f, z0, tol).map(|(e, _)| e)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocateOptions {
    /// Initial contour samples.
    pub samples: usize,
    /// Discs below `resolution * (1 + |center|)` are not subdivided.
    pub resolution: f64,
    /// Newton step tolerance relative to `1 + |z|`.
    pub tol: f64,
    /// Roots closer than `dedup * (1 + |z|)` are merged.
    pub dedup: f64,
}

impl Default for LocateOptions {
    fn default() -> Self {
        Self {
            samples: 64,
            resolution: 1e-3,
            tol: 1e-12,
            dedup: 1e-6,
        }
    }
}

/// Zeros of `f` inside `region`, sorted by increasing modulus.
pub fn locate_zeros(
    f: impl Fn(Complex64) -> Complex64,
    region: Disc,
    opts: &LocateOptions,
) -> Result<Vec<EigenEstimate>> {
    let (count, _) = count_robust(&f, region, opts)?;
    let mut found = Vec::new();
    search(&f, region, count, opts, 0, &mut found)?;
    found.retain(|e: &EigenEstimate| region.contains(e.z_root));
    found.sort_by(|a, b| a.z_root.norm().total_cmp(&b.z_root.norm()));
    let mut out: Vec<EigenEstimate> = Vec::new();
    for e in found {
        let dup = out
            .iter()
            .any(|o| (o.z_root - e.z_root).norm() <= opts.dedup * (1.0 + e.z_root.norm()));
        if !dup {
            out.push(e);
        }
    }
    Ok(out)
}

/// Counts zeros in `disc`, enlarging the radius slightly if the contour
/// passes through or grazes a zero. Returns the count and the disc actually
/// used.
fn count_robust(f: &impl Fn(Complex64) -> Complex64, disc: Disc, opts: &LocateOptions) -> Result<(usize, Disc)> {
    let mut last_err = None;
    for factor in [1.0, 1.07, 1.15, 1.25] {
        let d = Disc::new(disc.center, disc.radius * factor);
        match count_zeros_scaled(f, d, opts.samples) {
            Ok((n, _)) => return Ok((n, d)),
            Err(e @ (Error::ZeroOnContour { .. } | Error::NoConvergence { .. })) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap())
}

const MAX_DEPTH: usize = 60;

fn search(
    f: &impl Fn(Complex64) -> Complex64,
    disc: Disc,
    count: usize,
    opts: &LocateOptions,
    depth: usize,
    out: &mut Vec<EigenEstimate>,
) -> Result<()> {
    if count == 0 {
        return Ok(());
    }
    let scale = 1.0 + disc.center.norm();
    let resolution = opts.resolution * scale;
    let tol = opts.tol * scale;
    let newton = refine_zero(f, disc.center, tol)
        .ok()
        .filter(|e| disc.contains(e.z_root));

    if let Some(mut est) = newton {
        if count == 1 {
            out.push(est);
            return Ok(());
        }
        // a cluster: accept if a tiny disc around the root holds all zeros
        let probe = Disc::new(est.z_root, opts.resolution * (1.0 + est.z_root.norm()));
        if let Ok((m, _)) = count_robust(f, probe, opts) {
            if m == count {
                est.mult_estimate = m;
                out.push(est);
                return Ok(());
            }
        }
    }
    if disc.radius <= resolution || depth >= MAX_DEPTH {
        let z = newton.map_or(disc.center, |e| e.z_root);
        out.push(EigenEstimate {
            z_root: z,
            lambda: z.inv(),
            residual: f(z).norm(),
            mult_estimate: count,
        });
        return Ok(());
    }
    let h = 0.5 * disc.radius;
    let child_radius = disc.radius * std::f64::consts::FRAC_1_SQRT_2;
    for (sx, sy) in [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)] {
        let child = Disc::new(disc.center + Complex64::new(sx * h, sy * h), child_radius);
        let (n, used) = count_robust(f, child, opts)?;
        search(f, used, n, opts, depth + 1, out)?;
    }
    Ok(())
}

/// Eigenvalues of `op` located as zeros of `z -> det_p(I + sign z K_N)`
/// in `region`, with `lambda = -sign / z`.
pub fn locate_eigs(op: &DiscreteOperator, p: usize, region: Disc, sign: f64) -> Result<Vec<EigenEstimate>> {
    locate_eigs_with(op, p, region, sign, &LocateOptions::default())
}

pub fn locate_eigs_with(
    op: &DiscreteOperator,
    p: usize,
    region: Disc,
    sign: f64,
    opts: &LocateOptions,
) -> Result<Vec<EigenEstimate>> {
    if sign != 1.0 && sign != -1.0 {
        return Err(Error::InvalidInput(format!("sign must be +1 or -1, got {sign}")));
    }
    if p == 0 {
        return Err(Error::InvalidInput("determinant order p must be at least 1".into()));
    }
    let f = |z: Complex64| match log_det_p(&op.matrix, p, sign * z).and_then(|ld| ld.value()) {
        Ok(v) => v,
        Err(_) => Complex64::new(f64::NAN, f64::NAN),
    };
    let mut roots = locate_zeros(f, region, opts)?;
    for r in &mut roots {
        r.lambda = -sign / r.z_root;
    }
    Ok(roots)
}

/// Least-squares line through `(ln N, ln err)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: Vec<(f64, f64)>,
}

pub fn fit_order(ns: &[f64], errs: &[f64]) -> Result<OrderFit> {
    if ns.len() != errs.len() {
        return Err(Error::InvalidInput(format!(
            "{} sizes but {} errors",
            ns.len(),
            errs.len()
        )));
    }
    if ns.len() < 4 {
        return Err(Error::InvalidInput(format!("need at least 4 points, got {}", ns.len())));
    }
    if let Some(e) = errs.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(Error::Domain(format!("errors must be positive and finite, got {e}")));
    }
    if let Some(n) = ns.iter().find(|n| !(**n > 0.0 && n.is_finite())) {
        return Err(Error::Domain(format!("sizes must be positive, got {n}")));
    }
    let points: Vec<(f64, f64)> = ns.iter().zip(errs).map(|(n, e)| (n.ln(), e.ln())).collect();
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("all sizes are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(OrderFit {
        slope,
        intercept,
        r_squared,
        points,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_4, PI};

    use super::*;
    use crate::reference;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn cosh2(z: Complex64) -> Complex64 {
        (2.0 * z).cosh()
    }

    #[test]
    fn counts_for_cosh() {
        assert_eq!(count_zeros(cosh2, c(0.0, 0.0), 1.0, 64).unwrap(), 2);
        assert_eq!(count_zeros(cosh2, c(0.0, 0.0), 0.5, 64).unwrap(), 0);
        assert_eq!(count_zeros(cosh2, c(0.0, 0.0), 0.9, 64).unwrap(), 2);
        assert_eq!(count_zeros(cosh2, c(0.0, 0.0), 1.1, 64).unwrap(), 2);
        assert_eq!(count_zeros(|_| c(1.0, 0.0), c(0.3, 0.1), 2.0, 64).unwrap(), 0);
    }

    #[test]
    fn count_rejects_bad_input() {
        assert!(count_zeros(cosh2, c(0.0, 0.0), 1.0, 16).is_err());
        let r = count_zeros(|z| z - 1.0, c(0.0, 0.0), 1.0, 64);
        assert!(matches!(r, Err(Error::ZeroOnContour { .. })));
        let r = count_zeros(|_| c(f64::NAN, 0.0), c(0.0, 0.0), 1.0, 64);
        assert!(matches!(r, Err(Error::NonFinite { .. })));
    }

    #[test]
    fn refine_examples() {
        let e = refine_zero(reference::bernoulli_det, c(39.0, 0.0), 1e-12).unwrap();
        // a double zero: attainable accuracy is about sqrt(eps) relative
        assert!(
            (e.z_root - c(4.0 * PI * PI, 0.0)).norm() < 1e-6 * 4.0 * PI * PI,
            "{}",
            e.z_root
        );
        let e = refine_zero(|z| 1.0 + z, c(-0.9, 0.0), 1e-14).unwrap();
        assert!((e.z_root + 1.0).norm() < 1e-14);
        let e = refine_zero(cosh2, c(0.0, 0.7), 1e-14).unwrap();
        assert!((e.z_root - c(0.0, FRAC_PI_4)).norm() < 1e-12);
    }

    #[test]
    fn refine_residuals_decrease() {
        let (_, hist) = refine_zero_traced(cosh2, c(0.2, 0.6), 1e-14).unwrap();
        assert!(hist.windows(2).all(|w| w[1] < w[0]));
        let r = refine_zero(|z| z.exp(), c(0.0, 0.0), 1e-14);
        assert!(matches!(r, Err(Error::RefineFailed { .. })));
    }

    #[test]
    fn locate_polynomial_zeros() {
        // (z - 2)(z - 3)^2 (z + 1i)
        let f = |z: Complex64| (z - 2.0) * (z - 3.0) * (z - 3.0) * (z + c(0.0, 1.0));
        let roots = locate_zeros(f, Disc::new(c(2.0, 0.0), 2.5), &LocateOptions::default()).unwrap();
        assert_eq!(roots.len(), 3, "{roots:?}");
        let mults: Vec<usize> = roots.iter().map(|r| r.mult_estimate).collect();
        let zs: Vec<Complex64> = roots.iter().map(|r| r.z_root).collect();
        assert!((zs[0] - c(0.0, -1.0)).norm() < 1e-9);
        assert!((zs[1] - 2.0).norm() < 1e-9);
        assert!((zs[2] - 3.0).norm() < 1e-6);
        assert_eq!(mults, vec![1, 1, 2]);
        let none = locate_zeros(f, Disc::new(c(10.0, 10.0), 1.0), &LocateOptions::default()).unwrap();
        assert!(none.is_empty());
    }

    #[test]
    fn fit_exact_power_law() {
        let ns = [10.0, 20.0, 40.0, 80.0];
        let errs: Vec<f64> = ns.iter().map(|n| 3.0 / (n * n)).collect();
        let fit = fit_order(&ns, &errs).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        let fit = fit_order(&ns, &[0.5; 4]).unwrap();
        assert!(fit.slope.abs() < 1e-15);
        assert!(matches!(fit_order(&ns, &[1.0, 0.0, 1.0, 1.0]), Err(Error::Domain(_))));
        assert!(fit_order(&ns[..3], &errs[..3]).is_err());
    }
}
