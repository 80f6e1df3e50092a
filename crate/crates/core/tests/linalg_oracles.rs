mod common;

use common::*;
use fdhybf::linalg::*;
use nalgebra::DVector;
use num_complex::Complex64;
use proptest::prelude::*;

#[test]
fn gevd_matches_schur_oracle_on_random_pencils() {
    let mut rng = rng(11);
    for trial in 0..40 {
        let n = 2 + trial % 12;
        let d = 1 + trial % n;
        let a = random_hpd(&mut rng, n, 0.0);
        let b = random_hpd(&mut rng, n, 0.5);
        let got = hermitian_gevd_with_ridge(&a, &b, d, 0.0).unwrap();
        let want = brute_force_eigvals(&a, &b);
        for k in 0..d {
            let tol = 1e-8 * want[0].abs().max(1.0);
            assert!((got.eigvals[k] - want[k]).abs() <= tol, "n={n} k={k}: {} vs {}", got.eigvals[k], want[k]);
        }
        let vecs = brute_force_eigvecs(&a, &b, d);
        let s = subspace_sin(&got.eigvecs, &vecs);
        assert!(s <= 1e-6, "n={n} d={d}: sin angle {s}");
    }
}

#[test]
fn gevd_vectors_satisfy_the_pencil_equation() {
    let mut rng = rng(12);
    let a = random_hpd(&mut rng, 7, 0.0);
    let b = random_hpd(&mut rng, 7, 1.0);
    let r = hermitian_gevd_with_ridge(&a, &b, 3, 0.0).unwrap();
    for k in 0..3 {
        let v = r.eigvecs.column(k).into_owned();
        let resid = &a * &v - (&b * &v) * Complex64::new(r.eigvals[k], 0.0);
        assert!(resid.norm() <= 1e-9 * (&a * &v).norm());
    }
    // B-orthogonal columns.
    let gram = r.eigvecs.adjoint() * &b * &r.eigvecs;
    for i in 0..3 {
        for j in 0..3 {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((gram[(i, j)] - Complex64::new(want, 0.0)).norm() < 1e-9);
        }
    }
}

#[test]
fn gevd_subspace_invariant_to_b_scaling() {
    let mut rng = rng(13);
    let a = random_hpd(&mut rng, 6, 0.0);
    let b = random_hpd(&mut rng, 6, 0.3);
    let base = hermitian_gevd(&a, &b, 2).unwrap();
    for c in [1e-3, 0.5, 7.0, 1e4] {
        let scaled = hermitian_gevd(&a, &(&b * Complex64::new(c, 0.0)), 2).unwrap();
        assert!(subspace_sin(&base.eigvecs, &scaled.eigvecs) <= 1e-8);
    }
}

#[test]
fn gevd_is_deterministic_for_degenerate_pencils() {
    let b = identity(4);
    let first = hermitian_gevd(&b, &b, 4).unwrap();
    let second = hermitian_gevd(&b, &b, 4).unwrap();
    assert_eq!(first.eigvecs, second.eigvecs);
}

#[test]
fn non_hermitian_or_indefinite_inputs_are_rejected() {
    let mut rng = rng(14);
    let a = random_matrix(&mut rng, 3, 3);
    assert!(matches!(hermitian_gevd(&a, &identity(3), 1), Err(fdhybf::Error::NotHermitian(_))));
    let neg = identity(3) * Complex64::new(-1.0, 0.0);
    assert!(matches!(
        hermitian_gevd(&identity(3), &neg, 1),
        Err(fdhybf::Error::Conditioning { .. })
    ));
}

#[test]
fn kronecker_top_pair_matches_the_explicit_pencil() {
    let mut g = rng(17);
    for (trial, (n1, n2)) in [(2, 3), (3, 4), (4, 8), (8, 16), (6, 6)].into_iter().enumerate() {
        // Rank-deficient left factors, as in the analog update with d < M.
        let ax = random_psd(&mut g, n1, 1 + trial % n1);
        let aq = random_psd(&mut g, n2, 2);
        let bx = random_psd(&mut g, n1, 1 + trial % n1);
        let bq = random_hpd(&mut g, n2, 0.3);
        let eps = 1e-6;
        let a = kron(&ax, &aq);
        let b = ridged(&kron(&bx, &bq), eps);
        let got = kronecker_gevd_top(&ax, &aq, &bx, &bq, eps).unwrap();
        let want = brute_force_eigvals(&a, &b)[0];
        assert!((got.eigvals[0] - want).abs() <= 1e-7 * want.abs(), "{} vs {want}", got.eigvals[0]);
        let v = &got.eigvecs;
        let resid = (&a * v - &b * v * Complex64::new(got.eigvals[0], 0.0)).norm() / (a.norm() * v.norm());
        assert!(resid < 1e-9, "({n1}, {n2}): {resid}");
    }
}

#[test]
fn kronecker_top_pair_rejects_mismatched_factors() {
    let mut g = rng(18);
    let p = random_hpd(&mut g, 3, 0.1);
    let q = random_hpd(&mut g, 2, 0.1);
    assert!(kronecker_gevd_top(&p, &q, &q, &p, 1e-10).is_err());
}

#[test]
fn logdet_matches_lu_determinant() {
    let mut rng = rng(15);
    for n in 1..9 {
        let m = random_hpd(&mut rng, n, 0.1);
        let got = logdet_hpd(&m, 0.0, "m").unwrap();
        assert!((got - ln_det(&m)).abs() < 1e-10 * got.abs().max(1.0));
    }
}

#[test]
fn hermitian_inverse_matches_lu_inverse() {
    let mut rng = rng(16);
    let m = random_hpd(&mut rng, 6, 0.2);
    let inv = hermitian_inverse(&m, 0.0, "m").unwrap();
    let lu_inv = m.clone().try_inverse().unwrap();
    assert!(rel_err(&inv, &lu_inv) < 1e-10);
}

#[test]
fn floored_inverse_of_singular_matrix_is_finite_and_large() {
    let mut rng = rng(17);
    let m = random_psd(&mut rng, 4, 1);
    let inv = hermitian_inverse_floored(&m, 1e-10, "m").unwrap();
    assert!(is_finite(&inv));
    assert!(max_abs(&inv) > 1e8 / real_trace(&m));
    assert!(hermitian_inverse_floored(&zeros(3, 3), 1e-10, "zero").is_err());
}

#[test]
fn cholesky_reports_failing_pivot() {
    let m = ComplexMatrix::from_diagonal(&DVector::from_vec(vec![
        Complex64::new(2.0, 0.0),
        Complex64::new(-1.0, 0.0),
    ]));
    match cholesky(&m, "test") {
        Err(fdhybf::Error::Conditioning { index, pivot, .. }) => {
            assert_eq!(index, 1);
            assert!(pivot < 0.0);
        }
        other => panic!("{other:?}"),
    }
}

fn complex_matrix(rows: usize, cols: usize) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), rows * cols)
        .prop_map(move |v| ComplexMatrix::from_iterator(rows, cols, v.into_iter().map(|(r, i)| Complex64::new(r, i))))
}

fn dims() -> impl Strategy<Value = (usize, usize, usize, usize)> {
    (1usize..5, 1usize..5, 1usize..5, 1usize..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn phase_projection_is_idempotent_and_unit_modulus(m in complex_matrix(3, 4)) {
        let p = phase_project(&m);
        prop_assert!(p.iter().all(|z| z.norm() == 1.0 || (z.norm() - 1.0).abs() < 1e-15));
        let pp = phase_project(&p);
        prop_assert!(rel_err(&pp, &p) < 1e-15);
    }

    #[test]
    fn vec_unvec_round_trip((r, c, _, _) in dims(), seed in any::<u64>()) {
        let mut g = rng(seed);
        let x = random_matrix(&mut g, r, c);
        prop_assert_eq!(unvec(&vec(&x), r, c).unwrap(), x);
    }

    #[test]
    fn kron_vec_identity((m, n, p, q) in dims(), seed in any::<u64>()) {
        let mut g = rng(seed);
        let a = random_matrix(&mut g, m, n);
        let x = random_matrix(&mut g, n, p);
        let b = random_matrix(&mut g, p, q);
        let lhs = vec(&(&a * &x * &b));
        let rhs = kron(&b.transpose(), &a) * vec(&x);
        prop_assert!((&lhs - &rhs).norm() <= 1e-12 * lhs.norm().max(1.0));
    }

    #[test]
    fn ridge_leaves_scale_invariant_structure(seed in any::<u64>(), c in 0.1f64..10.0) {
        let mut g = rng(seed);
        let m = random_hpd(&mut g, 3, 0.0);
        let lhs = ridge(&(&m * Complex64::new(c, 0.0)), 1e-6);
        let rhs = ridge(&m, 1e-6) * Complex64::new(c, 0.0);
        prop_assert!(rel_err(&lhs, &rhs) < 1e-14);
    }
}
