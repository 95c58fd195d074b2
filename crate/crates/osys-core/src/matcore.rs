//! Dense complex matrix kernel.
//!
//! Everything downstream (cones, towers, tensor products) reduces its numeric
//! questions to hermiticity, eigenvalues, Kronecker products, and operator
//! norms of small dense matrices, so those live here in one place.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use thiserror::Error;

/// Complex scalar used throughout.
pub type Cx = Complex<f64>;
/// Dense complex matrix.
pub type CMat = DMatrix<Cx>;

pub fn cx(re: f64, im: f64) -> Cx {
    Complex::new(re, im)
}

/// Relative tolerance governing hermiticity and eigenvalue fuzz.
///
/// All positivity decisions are made up to `eps * max(1, scale)` where the
/// scale is taken from the matrix being tested, so large and small inputs are
/// treated alike.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tol {
    pub eps: f64,
}

impl Default for Tol {
    fn default() -> Self {
        Tol { eps: 1e-9 }
    }
}

impl Tol {
    pub fn new(eps: f64) -> Result<Self, MatError> {
        if !eps.is_finite() || eps < 0.0 {
            return Err(MatError::BadTolerance(eps));
        }
        Ok(Tol { eps })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatError {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("non-finite entry at ({row},{col})")]
    NonFinite { row: usize, col: usize },
    #[error("tolerance must be a finite nonnegative real, got {0}")]
    BadTolerance(f64),
    #[error("index ({row},{col}) out of range for dimension {dim}")]
    IndexOutOfRange { row: usize, col: usize, dim: usize },
}

/// n×n identity.
pub fn ident(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// n×n zero matrix.
pub fn zeros(n: usize) -> CMat {
    CMat::zeros(n, n)
}

/// Matrix unit e_{i,j} (1-based indices).
pub fn matrix_unit(n: usize, i: usize, j: usize) -> Result<CMat, MatError> {
    if i == 0 || j == 0 || i > n || j > n {
        return Err(MatError::IndexOutOfRange { row: i, col: j, dim: n });
    }
    let mut m = zeros(n);
    m[(i - 1, j - 1)] = cx(1.0, 0.0);
    Ok(m)
}

/// Diagonal matrix with real entries.
pub fn diag_re(d: &[f64]) -> CMat {
    CMat::from_fn(d.len(), d.len(), |i, j| {
        if i == j {
            cx(d[i], 0.0)
        } else {
            cx(0.0, 0.0)
        }
    })
}

/// Largest entry modulus; 0 for empty matrices.
pub fn max_abs(x: &CMat) -> f64 {
    x.iter().map(|v| v.norm()).fold(0.0_f64, f64::max)
}

fn check_finite(x: &CMat) -> Result<(), MatError> {
    for j in 0..x.ncols() {
        for i in 0..x.nrows() {
            let v = x[(i, j)];
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(MatError::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

fn check_square(x: &CMat) -> Result<usize, MatError> {
    if x.nrows() != x.ncols() {
        return Err(MatError::NotSquare { rows: x.nrows(), cols: x.ncols() });
    }
    Ok(x.nrows())
}

/// Hermiticity up to `eps * max(1, ||x||_max)` in the max-entry norm.
pub fn is_hermitian(x: &CMat, tol: Tol) -> Result<bool, MatError> {
    check_square(x)?;
    check_finite(x)?;
    let scale = max_abs(x).max(1.0);
    let dev = (x - x.adjoint()).iter().map(|v| v.norm()).fold(0.0_f64, f64::max);
    Ok(dev <= tol.eps * scale)
}

/// Eigenvalues of the hermitian part (x + x*)/2, ascending.
pub fn hermitian_eigenvalues(x: &CMat) -> Result<DVector<f64>, MatError> {
    check_square(x)?;
    check_finite(x)?;
    let h = (x + x.adjoint()).scale(0.5);
    let mut ev: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(DVector::from_vec(ev))
}

/// Positive semidefiniteness test.
///
/// A matrix that is not hermitian within `tol` is reported as not positive
/// rather than as an error. For hermitian x the test is
/// `lambda_min(x) >= -eps * max(1, ||x||)`.
pub fn is_psd(x: &CMat, tol: Tol) -> Result<bool, MatError> {
    check_square(x)?;
    if !is_hermitian(x, tol)? {
        return Ok(false);
    }
    if x.nrows() == 0 {
        return Ok(true);
    }
    let ev = hermitian_eigenvalues(x)?;
    let lo = ev[0];
    let hi = ev[ev.len() - 1];
    let scale = lo.abs().max(hi.abs()).max(1.0);
    Ok(lo >= -tol.eps * scale)
}

/// Smallest eigenvalue of the hermitian part, with the unit eigenvector.
pub fn min_eig_pair(x: &CMat) -> Result<(f64, DVector<Cx>), MatError> {
    check_square(x)?;
    check_finite(x)?;
    let h = (x + x.adjoint()).scale(0.5);
    let se = h.symmetric_eigen();
    let mut best = 0usize;
    for k in 1..se.eigenvalues.len() {
        if se.eigenvalues[k] < se.eigenvalues[best] {
            best = k;
        }
    }
    let v = se.eigenvectors.column(best).into_owned();
    Ok((se.eigenvalues[best], v))
}

/// Kronecker product.
///
/// Row-major convention: the (i,j) block of the result is a[i][j] * b, so the
/// composite row index is (i-1)*dim(b) + p in 1-based terms.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Operator norm (largest singular value).
///
/// For hermitian input this equals the largest eigenvalue modulus, which is
/// the order norm of the element relative to the identity unit.
pub fn op_norm(x: &CMat) -> f64 {
    if x.nrows() == 0 || x.ncols() == 0 {
        return 0.0;
    }
    if x.nrows() == x.ncols() {
        if let Ok(true) = is_hermitian(x, Tol::default()) {
            let h = (x + x.adjoint()).scale(0.5);
            return h
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .map(|v| v.abs())
                .fold(0.0_f64, f64::max);
        }
    }
    // general case: sqrt of the top eigenvalue of x* x
    let g = x.adjoint() * x;
    let top = g
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    top.max(0.0).sqrt()
}

/// Entrywise equality up to `eps * max(1, scale of both)`.
pub fn approx_eq(a: &CMat, b: &CMat, tol: Tol) -> bool {
    if a.nrows() != b.nrows() || a.ncols() != b.ncols() {
        return false;
    }
    let scale = max_abs(a).max(max_abs(b)).max(1.0);
    a.iter()
        .zip(b.iter())
        .all(|(x, y)| (x - y).norm() <= tol.eps * scale)
}

/// Seeded random matrix helpers shared by the search and harness code.
pub mod sample {
    use super::{cx, CMat, Cx};
    use rand::Rng;

    /// Standard normal via Box-Muller; deterministic for a fixed generator.
    pub fn gaussian<R: Rng>(rng: &mut R) -> f64 {
        loop {
            let u: f64 = rng.random::<f64>();
            if u > f64::MIN_POSITIVE {
                let v: f64 = rng.random::<f64>();
                return (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos();
            }
        }
    }

    pub fn gaussian_cx<R: Rng>(rng: &mut R) -> Cx {
        cx(gaussian(rng), gaussian(rng))
    }

    /// Matrix with i.i.d. complex Gaussian entries.
    pub fn gaussian_matrix<R: Rng>(n: usize, m: usize, rng: &mut R) -> CMat {
        CMat::from_fn(n, m, |_, _| gaussian_cx(rng))
    }

    /// Random hermitian matrix (G + G*)/2.
    pub fn hermitian<R: Rng>(n: usize, rng: &mut R) -> CMat {
        let g = gaussian_matrix(n, n, rng);
        (&g + g.adjoint()).scale(0.5)
    }

    /// Random PSD matrix G* G, scaled to keep entries of order one.
    pub fn psd<R: Rng>(n: usize, rng: &mut R) -> CMat {
        let g = gaussian_matrix(n, n, rng);
        (g.adjoint() * &g).scale(1.0 / n as f64)
    }

    /// Haar-ish random unitary from the QR factor of a Gaussian matrix.
    pub fn unitary<R: Rng>(n: usize, rng: &mut R) -> CMat {
        let g = gaussian_matrix(n, n, rng);
        let qr = g.qr();
        let mut q = qr.q();
        let r = qr.r();
        // fix the phase so the distribution does not collapse toward R's signs
        for j in 0..n {
            let d = r[(j, j)];
            if d.norm() > 0.0 {
                let phase = d / d.norm();
                for i in 0..n {
                    q[(i, j)] *= phase;
                }
            }
        }
        q
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn m2(a: [[f64; 2]; 2]) -> CMat {
        CMat::from_fn(2, 2, |i, j| cx(a[i][j], 0.0))
    }

    #[test]
    fn identity_is_psd() {
        assert!(is_psd(&ident(2), Tol::default()).unwrap());
    }

    #[test]
    fn symmetric_with_negative_eigenvalue_is_not_psd() {
        // eigenvalues of [[1,2],[2,1]] are -1 and 3
        let x = m2([[1.0, 2.0], [2.0, 1.0]]);
        assert!(!is_psd(&x, Tol::default()).unwrap());
        let ev = hermitian_eigenvalues(&x).unwrap();
        assert!((ev[0] - (-1.0)).abs() < 1e-12);
        assert!((ev[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn diagonally_dominant_symmetric_is_psd() {
        // eigenvalues of [[2,1],[1,2]] are 1 and 3
        let x = m2([[2.0, 1.0], [1.0, 2.0]]);
        assert!(is_psd(&x, Tol::default()).unwrap());
    }

    #[test]
    fn non_square_is_an_error() {
        let x = CMat::zeros(2, 3);
        assert!(matches!(is_psd(&x, Tol::default()), Err(MatError::NotSquare { .. })));
    }

    #[test]
    fn non_hermitian_is_not_positive_rather_than_error() {
        let x = matrix_unit(2, 1, 2).unwrap();
        assert!(!is_psd(&x, Tol::default()).unwrap());
    }

    #[test]
    fn kron_of_identities() {
        assert!(approx_eq(&kron(&ident(2), &ident(2)), &ident(4), Tol::default()));
    }

    #[test]
    fn kron_of_matrix_units_lands_at_the_composite_index() {
        // e_{1,2} (x) e_{1,2} = e_{1,4} in M_4: rows (1-1)*2+1 = 1, cols (2-1)*2+2 = 4
        let e12 = matrix_unit(2, 1, 2).unwrap();
        let want = matrix_unit(4, 1, 4).unwrap();
        assert_eq!(kron(&e12, &e12), want);
    }

    #[test]
    fn kron_with_identity_interleaves_diagonals() {
        let d = diag_re(&[1.0, 2.0]);
        let want = diag_re(&[1.0, 1.0, 2.0, 2.0]);
        assert_eq!(kron(&d, &ident(2)), want);
    }

    #[test]
    fn op_norm_examples() {
        assert!((op_norm(&ident(3)) - 1.0).abs() < 1e-12);
        // singular values of e_{1,2} are 1 and 0
        assert!((op_norm(&matrix_unit(2, 1, 2).unwrap()) - 1.0).abs() < 1e-12);
        assert!((op_norm(&diag_re(&[2.0, -3.0])) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn psd_both_ways_forces_zero_norm() {
        let x = zeros(3);
        assert!(is_psd(&x, Tol::default()).unwrap());
        assert!(is_psd(&(-x.clone()), Tol::default()).unwrap());
        assert!(op_norm(&x) <= 1e-12);
    }

    #[test]
    fn unitary_conjugation_preserves_psd_verdict() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..25 {
            let x = sample::hermitian(3, &mut rng);
            let u = sample::unitary(3, &mut rng);
            let y = u.adjoint() * &x * &u;
            assert_eq!(
                is_psd(&x, Tol::default()).unwrap(),
                is_psd(&y, Tol::default()).unwrap()
            );
        }
    }

    #[test]
    fn kron_norm_is_multiplicative() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [2usize, 3] {
            for _ in 0..20 {
                let a = sample::hermitian(n, &mut rng);
                let b = sample::hermitian(n, &mut rng);
                let lhs = op_norm(&kron(&a, &b));
                let rhs = op_norm(&a) * op_norm(&b);
                assert!((lhs - rhs).abs() <= 1e-9 * rhs.max(1.0));
            }
        }
    }

    #[test]
    fn kron_is_associative() {
        // complex multiplication regroups sums, so only up to roundoff
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let a = sample::gaussian_matrix(2, 2, &mut rng);
        let b = sample::gaussian_matrix(2, 2, &mut rng);
        let c = sample::gaussian_matrix(2, 2, &mut rng);
        let lhs = kron(&kron(&a, &b), &c);
        let rhs = kron(&a, &kron(&b, &c));
        assert!(approx_eq(&lhs, &rhs, Tol { eps: 1e-13 }));
    }

    #[test]
    fn kron_is_associative_exactly_on_integer_entries() {
        let a = diag_re(&[1.0, 2.0]);
        let b = matrix_unit(2, 1, 2).unwrap();
        let c = ident(2) + matrix_unit(2, 2, 1).unwrap();
        assert_eq!(kron(&kron(&a, &b), &c), kron(&a, &kron(&b, &c)));
    }

    #[test]
    fn random_unitaries_are_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let u = sample::unitary(4, &mut rng);
            assert!(approx_eq(&(u.adjoint() * &u), &ident(4), Tol { eps: 1e-10 }));
        }
    }
}
