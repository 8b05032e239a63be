//! Eigenvalues of a dense complex matrix: balancing, Householder reduction
//! to upper Hessenberg form, then single-shift QR with deflation.

use num_complex::Complex64;

use super::ComplexMatrix;
use crate::{Error, Result};

const EPS: f64 = f64::EPSILON;

#[inline]
fn abs1(z: Complex64) -> f64 {
    z.re.abs() + z.im.abs()
}

/// All eigenvalues with algebraic multiplicity, sorted by nonincreasing
/// modulus. Fails with [`Error::NoConvergence`] if the QR iteration exceeds
/// `30 n` sweeps.
pub fn eigenvalues(a: &ComplexMatrix) -> Result<Vec<Complex64>> {
    let n = a.dim();
    let mut h = a.as_slice().to_vec();
    balance(&mut h, n);
    hessenberg(&mut h, n);
    let mut eigs = hessenberg_qr(&mut h, n)?;
    eigs.sort_by(|x, y| y.norm().total_cmp(&x.norm()));
    Ok(eigs)
}

/// Diagonal similarity scaling by powers of two so that row and column
/// norms are comparable.
fn balance(a: &mut [Complex64], n: usize) {
    const RADIX: f64 = 2.0;
    const SQRDX: f64 = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += abs1(a[j * n + i]);
                    r += abs1(a[i * n + j]);
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= SQRDX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= SQRDX;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let inv = 1.0 / f;
                for j in 0..n {
                    a[i * n + j] *= inv;
                    a[j * n + i] *= f;
                }
            }
        }
    }
}

/// In-place Householder reduction to upper Hessenberg form.
fn hessenberg(a: &mut [Complex64], n: usize) {
    if n < 3 {
        return;
    }
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n - 2 {
        let len = n - k - 1;
        let norm: f64 = (k + 1..n).map(|i| a[i * n + k].norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = a[(k + 1) * n + k];
        let unit = if x0.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            x0 / x0.norm()
        };
        let alpha = -unit * norm;
        let v = &mut v[..len];
        for (t, i) in (k + 1..n).enumerate() {
            v[t] = a[i * n + k];
        }
        v[0] -= alpha;
        let vnorm: f64 = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for x in v.iter_mut() {
            *x /= vnorm;
        }
        // left: rows k+1.., columns k..
        for j in k..n {
            let mut s = Complex64::new(0.0, 0.0);
            for (t, i) in (k + 1..n).enumerate() {
                s += v[t].conj() * a[i * n + j];
            }
            s *= 2.0;
            for (t, i) in (k + 1..n).enumerate() {
                a[i * n + j] -= v[t] * s;
            }
        }
        // right: all rows, columns k+1..
        for i in 0..n {
            let row = &mut a[i * n + k + 1..(i + 1) * n];
            let mut s = Complex64::new(0.0, 0.0);
            for (x, vt) in row.iter().zip(v.iter()) {
                s += x * vt;
            }
            s *= 2.0;
            for (x, vt) in row.iter_mut().zip(v.iter()) {
                *x -= s * vt.conj();
            }
        }
        a[(k + 1) * n + k] = alpha;
        for i in k + 2..n {
            a[i * n + k] = Complex64::new(0.0, 0.0);
        }
    }
}

/// Eigenvalues of a 2x2 block `[[a, b], [c, d]]`.
fn eig2(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> (Complex64, Complex64) {
    let m = (a + d) * 0.5;
    let det = a * d - b * c;
    let disc = ((a - d) * 0.5 * ((a - d) * 0.5) + b * c).sqrt();
    let (p, q) = (m + disc, m - disc);
    let big = if p.norm() >= q.norm() { p } else { q };
    if big.norm() == 0.0 {
        return (big, big);
    }
    (big, det / big)
}

/// Givens rotation `[[c, s], [-conj(s), c]]` with real `c` mapping `(f, g)`
/// to `(r, 0)`.
fn givens(f: Complex64, g: Complex64) -> (f64, Complex64) {
    let fa = f.norm();
    let ga = g.norm();
    if ga == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    if fa == 0.0 {
        return (0.0, (g.conj()) / ga);
    }
    let r = fa.hypot(ga);
    let c = fa / r;
    let s = (f / fa) * g.conj() / r;
    (c, s)
}

fn hessenberg_qr(h: &mut [Complex64], n: usize) -> Result<Vec<Complex64>> {
    let budget = 30 * n;
    let norm = h.iter().map(|z| abs1(*z)).fold(0.0, f64::max);
    let mut eigs = Vec::with_capacity(n);
    if norm == 0.0 {
        eigs.resize(n, Complex64::new(0.0, 0.0));
        return Ok(eigs);
    }
    let idx = |i: usize, j: usize| i * n + j;
    let mut hi = n - 1;
    let mut total = 0usize;
    let mut its = 0usize;
    let mut rot: Vec<(f64, Complex64)> = Vec::with_capacity(n);
    loop {
        if hi == 0 {
            eigs.push(h[0]);
            break;
        }
        // look for a negligible subdiagonal entry
        let mut l = hi;
        while l > 0 {
            let sub = abs1(h[idx(l, l - 1)]);
            let mut tst = abs1(h[idx(l - 1, l - 1)]) + abs1(h[idx(l, l)]);
            if tst == 0.0 {
                tst = norm;
            }
            if sub <= f64::MIN_POSITIVE {
                break;
            }
            if sub <= EPS * tst {
                // Ahues & Tisseur refinement of the small-subdiagonal test
                let ab = sub.max(abs1(h[idx(l - 1, l)]));
                let ba = sub.min(abs1(h[idx(l - 1, l)]));
                let diff = h[idx(l - 1, l - 1)] - h[idx(l, l)];
                let aa = abs1(h[idx(l, l)]).max(abs1(diff));
                let bb = abs1(h[idx(l, l)]).min(abs1(diff));
                let s = aa + ab;
                if ba * (ab / s) <= (f64::MIN_POSITIVE).max(EPS * (bb * (aa / s))) {
                    break;
                }
            }
            // stagnation fallback: normwise test
            if its > 10 && sub <= EPS * norm {
                break;
            }
            l -= 1;
        }
        if l > 0 {
            h[idx(l, l - 1)] = Complex64::new(0.0, 0.0);
        }
        if l == hi {
            eigs.push(h[idx(hi, hi)]);
            hi -= 1;
            its = 0;
            continue;
        }
        if l + 1 == hi {
            let (e1, e2) = eig2(h[idx(l, l)], h[idx(l, hi)], h[idx(hi, l)], h[idx(hi, hi)]);
            eigs.push(e1);
            eigs.push(e2);
            if l == 0 {
                break;
            }
            hi = l - 1;
            its = 0;
            continue;
        }
        if total >= budget {
            return Err(Error::NoConvergence {
                what: "Hessenberg QR eigenvalue iteration",
                iterations: total,
            });
        }
        total += 1;
        its += 1;

        let shift = if its.is_multiple_of(10) {
            // exceptional shift
            h[idx(hi, hi)] + 0.75 * h[idx(hi, hi - 1)].re.abs()
        } else {
            let (e1, e2) = eig2(
                h[idx(hi - 1, hi - 1)],
                h[idx(hi - 1, hi)],
                h[idx(hi, hi - 1)],
                h[idx(hi, hi)],
            );
            let d = h[idx(hi, hi)];
            if (e1 - d).norm() <= (e2 - d).norm() {
                e1
            } else {
                e2
            }
        };

        // explicit shifted QR step on the active block l..=hi
        for i in l..=hi {
            h[idx(i, i)] -= shift;
        }
        rot.clear();
        for k in l..hi {
            let (c, s) = givens(h[idx(k, k)], h[idx(k + 1, k)]);
            for j in k..=hi {
                let x = h[idx(k, j)];
                let y = h[idx(k + 1, j)];
                h[idx(k, j)] = x * c + s * y;
                h[idx(k + 1, j)] = -s.conj() * x + y * c;
            }
            h[idx(k + 1, k)] = Complex64::new(0.0, 0.0);
            rot.push((c, s));
        }
        for (t, k) in (l..hi).enumerate() {
            let (c, s) = rot[t];
            for i in l..=(k + 1) {
                let x = h[idx(i, k)];
                let y = h[idx(i, k + 1)];
                h[idx(i, k)] = x * c + y * s.conj();
                h[idx(i, k + 1)] = -x * s + y * c;
            }
        }
        for i in l..=hi {
            h[idx(i, i)] += shift;
        }
    }
    Ok(eigs)
}
