mod common;

use covest::matops::{
    inv_spd, logdet_spd, logm_spd, min_eig, norms, project_psd, sqrtm_psd, sym_eig,
};
use covest::structure::{
    is_admissible, matrix_to_params, params_to_matrix, toeplitz_structure, LinearStructure,
};
use covest::{Matrix, SymMatrix};
use proptest::prelude::*;

fn sym_strategy(max_n: usize) -> impl Strategy<Value = SymMatrix> {
    (1..=max_n).prop_flat_map(|n| {
        prop::collection::vec(-2.0f64..2.0, n * n).prop_map(move |v| {
            let m = Matrix::from_vec(n, n, v);
            SymMatrix::from_matrix(&m.add(&m.transpose()).scale(0.5)).unwrap()
        })
    })
}

fn pair_strategy(max_n: usize) -> impl Strategy<Value = (SymMatrix, SymMatrix)> {
    (1..=max_n).prop_flat_map(|n| {
        (
            prop::collection::vec(-2.0f64..2.0, n * n),
            prop::collection::vec(-2.0f64..2.0, n * n),
        )
            .prop_map(move |(a, b)| {
                let f = |v: Vec<f64>| {
                    let m = Matrix::from_vec(n, n, v);
                    SymMatrix::from_matrix(&m.add(&m.transpose()).scale(0.5)).unwrap()
                };
                (f(a), f(b))
            })
    })
}

fn psd_of(a: &SymMatrix) -> SymMatrix {
    SymMatrix::from_matrix(&a.as_matrix().matmul(a.as_matrix())).unwrap()
}

/// `exp(S)` by scaling and squaring of a Taylor series.
fn expm(s: &SymMatrix) -> Matrix {
    let n = s.n();
    let norm = s.frobenius_norm();
    let squarings = (norm.max(1.0).log2().ceil() as i32 + 4).max(0);
    let a = s.as_matrix().scale(0.5f64.powi(squarings));
    let mut term = Matrix::identity(n);
    let mut sum = Matrix::identity(n);
    for k in 1..30 {
        term = term.matmul(&a).scale(1.0 / k as f64);
        sum = sum.add(&term);
    }
    for _ in 0..squarings {
        sum = sum.matmul(&sum);
    }
    sum
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jacobi_reconstructs_and_is_orthogonal(a in sym_strategy(8)) {
        let e = sym_eig(&a).unwrap();
        let n = a.n();
        let scale = a.frobenius_norm().max(1.0);
        prop_assert!(e.reconstruct().sub(&a).frobenius_norm() <= 1e-10 * scale);
        let vtv = e.vectors.transpose().matmul(&e.vectors);
        prop_assert!(vtv.sub(&Matrix::identity(n)).max_abs() <= 1e-12);
        prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        let trace: f64 = e.values.iter().sum();
        prop_assert!((trace - a.trace()).abs() <= 1e-10 * scale);
    }

    #[test]
    fn sqrt_squares_back(a in sym_strategy(6)) {
        let p = psd_of(&a);
        let r = sqrtm_psd(&p, 0.0).unwrap();
        let back = r.as_matrix().matmul(r.as_matrix());
        prop_assert!(back.sub(p.as_matrix()).frobenius_norm() <= 1e-9 * p.frobenius_norm().max(1.0));
        prop_assert!(min_eig(&r).unwrap() >= -1e-10 * r.frobenius_norm().max(1.0));
    }

    #[test]
    fn projection_is_idempotent_and_nonexpansive((a, b) in pair_strategy(6)) {
        let pa = project_psd(&a).unwrap();
        let pb = project_psd(&b).unwrap();
        let scale = a.frobenius_norm().max(1.0);
        prop_assert!(project_psd(&pa).unwrap().sub(&pa).frobenius_norm() <= 1e-10 * scale);
        prop_assert!(pa.sub(&pb).frobenius_norm() <= a.sub(&b).frobenius_norm() + 1e-10 * scale);
        prop_assert!(min_eig(&pa).unwrap() >= -1e-10 * scale);
        // residual is negative semidefinite and orthogonal to the projection
        let r = a.sub(&pa);
        prop_assert!(sym_eig(&r).unwrap().max() <= 1e-10 * scale);
        prop_assert!(r.dot(&pa).abs() <= 1e-9 * scale * scale);
    }

    #[test]
    fn logm_inverts_exponential(a in sym_strategy(5)) {
        let s = a.scale(0.5);
        let e = SymMatrix::from_matrix(&expm(&s)).unwrap();
        let l = logm_spd(&e).unwrap();
        prop_assert!(l.sub(&s).frobenius_norm() <= 1e-8 * s.frobenius_norm().max(1.0));
        prop_assert!((logdet_spd(&e).unwrap() - s.trace()).abs() <= 1e-8 * s.frobenius_norm().max(1.0));
    }

    #[test]
    fn inverse_against_gauss_jordan(a in sym_strategy(6)) {
        let p = psd_of(&a).shift(0.5);
        let inv = inv_spd(&p).unwrap();
        let oracle = common::inverse(p.as_matrix());
        prop_assert!(inv.as_matrix().sub(&oracle).max_abs() <= 1e-9 * oracle.max_abs().max(1.0));
    }

    #[test]
    fn norm_ordering(a in sym_strategy(6)) {
        let nr = norms(&a).unwrap();
        prop_assert!(nr.frobenius <= nr.nuclear + 1e-12);
        prop_assert!(nr.nuclear <= (a.n() as f64).sqrt() * nr.frobenius + 1e-10);
    }

    #[test]
    fn toeplitz_projection_properties(a in sym_strategy(7)) {
        let n = a.n();
        let l = toeplitz_structure(n);
        let p = l.project(&a).unwrap();
        // diagonal averaging oracle
        for i in 0..n {
            for j in i..n {
                let k = j - i;
                let avg = (0..n - k).map(|s| a.get(s, s + k)).sum::<f64>() / (n - k) as f64;
                prop_assert!((p.get(i, j) - avg).abs() <= 1e-12);
            }
        }
        prop_assert!(l.project(&p).unwrap().sub(&p).frobenius_norm() <= 1e-12);
        let r = a.sub(&p);
        for q in l.basis() {
            prop_assert!(r.dot(q).abs() <= 1e-10);
        }
        let params = matrix_to_params(&p).unwrap();
        prop_assert_eq!(params_to_matrix(&params).unwrap(), p);
    }

    #[test]
    fn generic_structure_matches_toeplitz(a in sym_strategy(5)) {
        let n = a.n();
        let spanning: Vec<SymMatrix> = (0..n)
            .map(|k| SymMatrix::from_fn(n, |i, j| if j - i == k { 1.0 } else { 0.0 }))
            .collect();
        let generic = LinearStructure::from_spanning_set(n, &spanning).unwrap();
        let fast = toeplitz_structure(n);
        prop_assert_eq!(generic.dim(), n);
        let d = generic.project(&a).unwrap().sub(&fast.project(&a).unwrap());
        prop_assert!(d.frobenius_norm() <= 1e-10 * a.frobenius_norm().max(1.0));
    }
}

#[test]
fn admissibility_of_simple_cases() {
    let t = common::toeplitz(&[2.0, 1.0, 0.5]);
    assert!(is_admissible(&t, 1e-9).unwrap().admissible);
    let bad = common::toeplitz(&[1.0, 2.0, 0.0]);
    let adm = is_admissible(&bad, 1e-9).unwrap();
    assert!(!adm.admissible && adm.min_eig < 0.0 && adm.toeplitz_defect == 0.0);
}
