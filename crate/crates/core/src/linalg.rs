//! Small dense solvers built on QR, LU and symmetric eigendecompositions.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Least-squares solution of `a x = b` for `a` of full column rank, by Householder QR.
pub fn lstsq<T: Real>(a: &DMatrix<T>, b: &DVector<T>) -> Result<DVector<T>> {
    let (m, k) = a.shape();
    if m < k {
        return Err(Error::LinearSolve(format!("{m} equations for {k} unknowns")));
    }
    if k == 0 {
        return Ok(DVector::zeros(0));
    }
    let qr = a.clone().qr();
    let r = qr.r();
    let scale = r.diagonal().amax();
    if r.diagonal().iter().any(|d| d.abs() <= scale * T::lit(1e-13)) {
        return Err(Error::LinearSolve("rank-deficient least-squares system".into()));
    }
    let rhs = qr.q().transpose() * b;
    r.solve_upper_triangular(&rhs)
        .ok_or_else(|| Error::LinearSolve("singular triangular factor".into()))
}

/// Kernel vector of a square matrix with a one-dimensional kernel, by shifted inverse iteration.
pub fn null_vector<T: Real>(a: &DMatrix<T>) -> Result<DVector<T>> {
    let n = a.nrows();
    let scale = a.amax().max(T::one());
    let mut v = DVector::from_element(n, T::one() / T::lit(n as f64).sqrt());
    for shift in [1e-13, 1e-10, 1e-7] {
        let shifted = a - DMatrix::identity(n, n) * (scale * T::lit(shift));
        let lu = shifted.lu();
        let mut ok = true;
        for _ in 0..3 {
            match lu.solve(&v) {
                Some(w) if w.iter().all(|x| x.is_finite_val()) && w.norm() > T::zero() => v = w.normalize(),
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Ok(v);
        }
        v = DVector::from_element(n, T::one() / T::lit(n as f64).sqrt());
    }
    Err(Error::LinearSolve("inverse iteration failed".into()))
}

/// Orthonormal eigenvectors (as columns) of `m m^T` for eigenvalues at most `rel * max`,
/// i.e. a basis of the orthogonal complement of the column span of `m`.
pub fn complement_basis<T: Real>(m: &DMatrix<T>, rel: T) -> Vec<DVector<T>> {
    let n = m.nrows();
    if m.ncols() == 0 {
        return (0..n).map(|i| DVector::from_fn(n, |j, _| if i == j { T::one() } else { T::zero() })).collect();
    }
    let gram = m * m.transpose();
    let eig = SymmetricEigen::new(gram);
    let top = eig.eigenvalues.iter().copied().fold(T::zero(), |a, b| a.max(b));
    eig.eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &ev)| ev <= top * rel)
        .map(|(i, _)| eig.eigenvectors.column(i).into_owned())
        .collect()
}
