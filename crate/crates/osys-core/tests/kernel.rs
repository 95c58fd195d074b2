mod common;

use common::{jacobi_eigenvalues, rng, shuffle_embed_oracle};
use osys_core::matcore::{self, ident, kron, op_norm, sample, CMat, Tol};

#[test]
fn library_eigenvalues_match_jacobi_oracle() {
    let mut r = rng(101);
    for n in [1usize, 2, 3, 4, 6] {
        for _ in 0..20 {
            let h = sample::hermitian(n, &mut r);
            let lib = matcore::hermitian_eigenvalues(&h).unwrap();
            let ora = jacobi_eigenvalues(&h);
            for (a, b) in lib.iter().zip(ora.iter()) {
                assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "n={n}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn psd_verdict_matches_jacobi_sign() {
    let mut r = rng(102);
    for _ in 0..60 {
        let h = sample::hermitian(3, &mut r);
        let lo = jacobi_eigenvalues(&h)[0];
        if lo.abs() < 1e-6 {
            continue; // stay away from the decision boundary
        }
        let want = lo > 0.0;
        assert_eq!(matcore::is_psd(&h, Tol::default()).unwrap(), want);
    }
}

#[test]
fn op_norm_matches_extreme_jacobi_eigenvalue() {
    let mut r = rng(103);
    for _ in 0..40 {
        let h = sample::hermitian(4, &mut r);
        let ev = jacobi_eigenvalues(&h);
        let want = ev[0].abs().max(ev[ev.len() - 1].abs());
        let got = op_norm(&h);
        assert!((got - want).abs() <= 1e-9 * want.max(1.0));
    }
}

#[test]
fn kron_with_leading_identity_matches_shuffle_oracle() {
    let mut r = rng(104);
    for n in [1usize, 2, 3, 4] {
        for l in [1usize, 2, 3] {
            let x = sample::gaussian_matrix(n, n, &mut r);
            let via_kron = kron(&ident(l), &x);
            let via_shuffle = shuffle_embed_oracle(&x, l);
            assert!(matcore::approx_eq(&via_kron, &via_shuffle, Tol { eps: 1e-12 }));
        }
    }
}

#[test]
fn random_psd_samples_are_psd() {
    let mut r = rng(105);
    for _ in 0..30 {
        let x = sample::psd(4, &mut r);
        assert!(matcore::is_psd(&x, Tol::default()).unwrap());
    }
}

#[test]
fn jacobi_oracle_on_known_spectrum() {
    // [[1,2],[2,1]] has eigenvalues -1 and 3
    let x = CMat::from_fn(2, 2, |i, j| {
        matcore::cx(if i == j { 1.0 } else { 2.0 }, 0.0)
    });
    let ev = jacobi_eigenvalues(&x);
    assert!((ev[0] + 1.0).abs() < 1e-12);
    assert!((ev[1] - 3.0).abs() < 1e-12);
}
