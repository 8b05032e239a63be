use std::collections::BTreeMap;

use fredet::determinants::{
    det_from_eigs, det_p, det_p_matrix, det_series_at, det_series_eval, identity_residuals, plemelj_coeffs_matrix,
    plemelj_recursion, Route,
};
use fredet::discretize::{assemble, Scheme};
use fredet::kernels::registry;
use fredet::linalg::{eigenvalues, trace_powers, ComplexMatrix};
use fredet::reference::{analytic_det, bernoulli_det, green_det};
use fredet::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Entries uniform in the disc of radius `1/sqrt(n)`.
fn matrix(max_n: usize) -> impl Strategy<Value = ComplexMatrix> {
    (1..=max_n).prop_flat_map(|n| {
        prop::collection::vec((0.0f64..1.0, 0.0f64..std::f64::consts::TAU), n * n).prop_map(move |v| {
            let r = 1.0 / (n as f64).sqrt();
            ComplexMatrix::new(
                n,
                v.into_iter()
                    .map(|(u, t)| Complex64::from_polar(r * u.sqrt(), t))
                    .collect(),
            )
            .unwrap()
        })
    })
}

fn point(r: f64) -> impl Strategy<Value = Complex64> {
    (-r..r, -r..r).prop_map(|(re, im)| c(re, im))
}

fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn three_routes_agree(a in matrix(10), p in 1usize..=3, z in point(1.0)) {
        let lu = det_p_matrix(&a, p, z).unwrap();
        let series = det_series_at(&a, p, z).unwrap();
        let eig = det_from_eigs(&eigenvalues(&a).unwrap(), p, z);
        prop_assert_eq!(series.route, Route::Series);
        prop_assert!(close(lu, series.value, 1e-10), "series {} vs {}", series.value, lu);
        prop_assert!(close(lu, eig.value, 1e-10), "eig {} vs {}", eig.value, lu);
    }

    #[test]
    fn normalized_at_zero(a in matrix(10), p in 1usize..=4) {
        let zero = c(0.0, 0.0);
        prop_assert_eq!(det_p_matrix(&a, p, zero).unwrap(), c(1.0, 0.0));
        let s = plemelj_coeffs_matrix(&a, p, 12).unwrap();
        prop_assert_eq!(s.coeffs[0], c(1.0, 0.0));
        prop_assert_eq!(det_series_eval(&s, zero).value, c(1.0, 0.0));
    }

    #[test]
    fn series_terminates_for_plain_determinant(a in matrix(8)) {
        let n = a.dim();
        let s = plemelj_coeffs_matrix(&a, 1, n + 6).unwrap();
        let scale = s.coeffs.iter().map(|c| c.norm()).fold(1.0, f64::max);
        prop_assert!(s.coeffs[n + 1..].iter().all(|c| c.norm() <= 1e-12 * scale));
    }

    #[test]
    fn low_coefficients_vanish(a in matrix(8), p in 2usize..=4) {
        // det_p(I + zA) = 1 + O(z^p)
        let s = plemelj_coeffs_matrix(&a, p, 8).unwrap();
        for k in 1..p {
            prop_assert!(s.coeffs[k].norm() < 1e-13, "k={}: {}", k, s.coeffs[k]);
        }
        prop_assert!(s.traces[..p - 1].iter().all(|t| *t == c(0.0, 0.0)));
    }

    #[test]
    fn factorized_matches_literal_recursion(a in matrix(6), p in 2usize..=3) {
        let s = plemelj_coeffs_matrix(&a, p, 16).unwrap();
        let mut nu = trace_powers(&a, 16);
        for t in nu.iter_mut().take(p - 1) {
            *t = c(0.0, 0.0);
        }
        let lit = plemelj_recursion(&nu, 16);
        for (x, y) in s.coeffs.iter().zip(&lit) {
            prop_assert!((x - y).norm() < 1e-10, "{} vs {}", x, y);
        }
    }

    #[test]
    fn order_chain(a in matrix(8), p in 1usize..=4, z in point(1.0)) {
        // det_{p+1}(I + zA) = det_p(I + zA) exp((-z)^p tr A^p / p)
        let t = trace_powers(&a, p)[p - 1];
        let lhs = det_p_matrix(&a, p + 1, z).unwrap();
        let rhs = det_p_matrix(&a, p, z).unwrap() * ((-z).powi(p as i32) * t / p as f64).exp();
        prop_assert!(close(lhs, rhs, 1e-12), "{} vs {}", lhs, rhs);
    }

    #[test]
    fn conjugate_symmetry_for_real_matrices(n in 1usize..8, data in prop::collection::vec(-1.0f64..1.0, 64),
                                            p in 1usize..=3, z in point(1.5)) {
        let a = ComplexMatrix::from_real(n, &data[..n * n]).unwrap();
        let d = det_p_matrix(&a, p, z).unwrap();
        let dc = det_p_matrix(&a, p, z.conj()).unwrap();
        prop_assert!(close(d.conj(), dc, 1e-13));
    }

    #[test]
    fn square_identities(a in matrix(8), z in point(1.0)) {
        for (name, r) in identity_residuals(&a, z).unwrap() {
            prop_assert!(r < 1e-12, "{}: {}", name, r);
        }
    }
}

#[test]
fn registry_routes_agree() {
    let grid: Vec<Complex64> = (0..5)
        .flat_map(|i| (0..5).map(move |j| c(-1.0 + 0.5 * i as f64, -1.0 + 0.5 * j as f64)))
        .collect();
    let p0 = BTreeMap::new();
    let cases = [
        ("green", vec![Scheme::Ngl, Scheme::Ncc, Scheme::Rect]),
        ("bernoulli", vec![Scheme::Ngl, Scheme::Ncc, Scheme::Rect]),
        ("sign", vec![Scheme::Ngl, Scheme::Ncc, Scheme::Rect]),
        ("abs_pow", vec![Scheme::Singular]),
        ("abs_pow_iter2", vec![Scheme::Rect]),
    ];
    for (name, schemes) in cases {
        let spec = registry(name, &p0).unwrap();
        for s in schemes {
            for n in [8usize, 16, 32, 64] {
                let op = assemble(&spec, s, n, s == Scheme::Rect && spec.is_split()).unwrap();
                let eigs = eigenvalues(&op.matrix).unwrap();
                let rho = op.matrix.max_row_sum();
                let nu = trace_powers(&op.matrix, 2);
                for p in 1..=3 {
                    for &z in &grid {
                        let lu = det_p(&op, p, z).unwrap().value;
                        let eig = det_from_eigs(&eigs, p, z).value;
                        assert!(close(lu, eig, 1e-8), "{name} {s} n={n} p={p} z={z}: {lu} vs {eig}");
                        // Newton-identity rounding grows like eps (rho |z|)^N, and the
                        // exponential factor cancels like exp(sum |z^j nu_j| / j)
                        let exp_part: f64 = (1..p)
                            .map(|j| z.norm().powi(j as i32) * nu[j - 1].norm() / j as f64)
                            .sum();
                        let growth = (n as f64) * (rho * z.norm()).max(1.0).ln() + exp_part;
                        if growth < 20.0 {
                            let ser = det_series_at(&op.matrix, p, z).unwrap().value;
                            assert!(
                                close(lu, ser, 1e-8),
                                "{name} {s} n={n} p={p} z={z}: {lu} vs series {ser}"
                            );
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn smooth_kernels_converge_to_closed_forms() {
    let p0 = BTreeMap::new();
    let green = registry("green", &p0).unwrap();
    let bern = registry("bernoulli", &p0).unwrap();
    let pi2 = std::f64::consts::PI.powi(2);

    // zeros at n^2 pi^2 (green) and 4 n^2 pi^2 (bernoulli)
    let op = assemble(&green, Scheme::Ncc, 32, false).unwrap();
    assert!(det_p(&op, 1, c(-pi2, 0.0)).unwrap().value.norm() < 1e-3);
    let op = assemble(&green, Scheme::Ngl, 64, false).unwrap();
    let d = det_p(&op, 1, c(-1.0, 0.0)).unwrap().value;
    assert!((d - green_det(c(1.0, 0.0))).norm() < 1e-3);

    let op = assemble(&bern, Scheme::Ngl, 64, false).unwrap();
    let d = det_p(&op, 1, c(-1.0, 0.0)).unwrap().value;
    assert!(
        (d - bernoulli_det(c(1.0, 0.0))).norm() < 5e-6,
        "{}",
        (d - bernoulli_det(c(1.0, 0.0))).norm()
    );
    assert!(bernoulli_det(c(4.0 * pi2, 0.0)).norm() < 1e-14);
}

#[test]
fn sign_kernel_regularized_determinant() {
    let spec = registry("sign", &BTreeMap::new()).unwrap();
    let ops: Vec<_> = [64, 128]
        .iter()
        .map(|&n| assemble(&spec, Scheme::Ncc, n, false).unwrap())
        .collect();
    for z in [c(0.5, 0.0), c(0.2, 0.7), c(-0.9, -0.3)] {
        let want = analytic_det("sign", 2, z).unwrap();
        let errs: Vec<f64> = ops
            .iter()
            .map(|op| (det_p(op, 2, -z).unwrap().value - want).norm() / want.norm())
            .collect();
        assert!(errs[1] < 0.6 * errs[0] && errs[1] < 1e-2, "{z}: {errs:?}");
    }
}
