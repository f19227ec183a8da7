//! Exact integer matrices: column Hermite reduction, integer kernels,
//! image lattices, unimodular completion and rational inversion.

use std::fmt;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<String>> =
            (0..self.rows).map(|i| (0..self.cols).map(|j| self.get(i, j).to_string()).collect()).collect();
        write!(f, "IntMatrix{rows:?}")
    }
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, BigInt::one());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> i64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, BigInt::from(f(i, j)));
            }
        }
        m
    }

    /// Matrix with the given columns, each of length `rows`.
    pub fn from_columns(rows: usize, columns: &[Vec<BigInt>]) -> Self {
        let mut m = Self::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            assert_eq!(c.len(), rows, "column length");
            for (i, v) in c.iter().enumerate() {
                m.set(i, j, v.clone());
            }
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.data[i * self.cols + j] = v;
    }

    pub fn column(&self, j: usize) -> Vec<BigInt> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn columns(&self) -> Vec<Vec<BigInt>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn row(&self, i: usize) -> Vec<BigInt> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    /// Columns `range` as a new matrix.
    pub fn select_columns(&self, range: std::ops::Range<usize>) -> Self {
        let cols: Vec<_> = range.map(|j| self.column(j)).collect();
        Self::from_columns(self.rows, &cols)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    /// `[self | other]`.
    pub fn hstack(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows, "row counts");
        let mut cols = self.columns();
        cols.extend(other.columns());
        Self::from_columns(self.rows, &cols)
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for i in 0..self.rows {
                self.data.swap(i * self.cols + a, i * self.cols + b);
            }
        }
    }

    /// `col[dst] -= k * col[src]`.
    fn sub_col_multiple(&mut self, dst: usize, src: usize, k: &BigInt) {
        for i in 0..self.rows {
            let v = self.get(i, dst) - k * self.get(i, src);
            self.set(i, dst, v);
        }
    }

    fn negate_col(&mut self, j: usize) {
        for i in 0..self.rows {
            let v = -self.get(i, j);
            self.set(i, j, v);
        }
    }

    pub fn to_i64(&self) -> Result<Vec<Vec<i64>>> {
        (0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| self.get(i, j).to_i64().ok_or_else(|| Error::OutOfDomain("integer entry exceeds i64".into())))
                    .collect()
            })
            .collect()
    }

    pub fn to_real<T: Real>(&self) -> DMatrix<T> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| T::lit(self.get(i, j).to_f64().unwrap_or(f64::NAN)))
    }
}

/// Column echelon form `A U = H` with `U` unimodular. The first `rank` columns
/// of `H` are nonzero with positive pivots on strictly increasing rows, earlier
/// entries of each pivot row reduced into `[0, pivot)`; the remaining columns are zero.
#[derive(Debug, Clone)]
pub struct ColumnEchelon {
    pub h: IntMatrix,
    pub u: IntMatrix,
    pub rank: usize,
    pub pivot_rows: Vec<usize>,
}

pub fn column_echelon(a: &IntMatrix) -> ColumnEchelon {
    let n = a.ncols();
    let mut h = a.clone();
    let mut u = IntMatrix::identity(n);
    let mut piv = 0;
    let mut pivot_rows = Vec::new();
    for row in 0..a.nrows() {
        if piv == n {
            break;
        }
        loop {
            let best = (piv..n)
                .filter(|&j| !h.get(row, j).is_zero())
                .min_by(|&x, &y| h.get(row, x).abs().cmp(&h.get(row, y).abs()).then(x.cmp(&y)));
            let Some(best) = best else { break };
            h.swap_cols(piv, best);
            u.swap_cols(piv, best);
            let mut done = true;
            for j in piv + 1..n {
                if h.get(row, j).is_zero() {
                    continue;
                }
                let q = h.get(row, j).div_floor(h.get(row, piv));
                h.sub_col_multiple(j, piv, &q);
                u.sub_col_multiple(j, piv, &q);
                if !h.get(row, j).is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if h.get(row, piv).is_zero() {
            continue;
        }
        if h.get(row, piv).is_negative() {
            h.negate_col(piv);
            u.negate_col(piv);
        }
        for j in 0..piv {
            let q = h.get(row, j).div_floor(h.get(row, piv));
            if !q.is_zero() {
                h.sub_col_multiple(j, piv, &q);
                u.sub_col_multiple(j, piv, &q);
            }
        }
        pivot_rows.push(row);
        piv += 1;
    }
    ColumnEchelon { h, u, rank: piv, pivot_rows }
}

/// Basis (as columns) of the lattice `{ z in Z^n : A z = 0 }`.
pub fn integer_kernel(a: &IntMatrix) -> IntMatrix {
    let e = column_echelon(a);
    e.u.select_columns(e.rank..a.ncols())
}

/// Basis (as columns) of the lattice spanned by the columns of `a`.
pub fn image_basis(a: &IntMatrix) -> IntMatrix {
    let e = column_echelon(a);
    e.h.select_columns(0..e.rank)
}

/// Exact inverse over the rationals; `None` when singular.
pub fn inverse_rational(a: &IntMatrix) -> Option<Vec<Vec<BigRational>>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "square matrix");
    let mut m: Vec<Vec<BigRational>> = (0..n)
        .map(|i| {
            let mut row: Vec<BigRational> = a.row(i).into_iter().map(BigRational::from_integer).collect();
            row.extend((0..n).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }));
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n).find(|&r| !m[r][c].is_zero())?;
        m.swap(c, p);
        let inv = m[c][c].recip();
        for v in m[c].iter_mut() {
            *v = &*v * &inv;
        }
        for r in 0..n {
            if r != c && !m[r][c].is_zero() {
                let k = m[r][c].clone();
                for j in 0..2 * n {
                    let v = &m[r][j] - &k * &m[c][j];
                    m[r][j] = v;
                }
            }
        }
    }
    Some(m.into_iter().map(|row| row[n..].to_vec()).collect())
}

/// Exact inverse of a unimodular integer matrix.
pub fn inverse_unimodular(a: &IntMatrix) -> Result<IntMatrix> {
    let inv = inverse_rational(a).ok_or_else(|| Error::LinearSolve("singular integer matrix".into()))?;
    let n = a.nrows();
    let mut out = IntMatrix::zeros(n, n);
    for (i, row) in inv.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if !v.is_integer() {
                return Err(Error::LinearSolve("matrix is not unimodular".into()));
            }
            out.set(i, j, v.to_integer());
        }
    }
    Ok(out)
}

/// Columns `C` such that `[W | C]` is unimodular. `W` must have full column
/// rank and span a saturated sublattice (one cut out by a subspace).
pub fn complete_basis(w: &IntMatrix) -> Result<IntMatrix> {
    let n = w.nrows();
    let m = w.ncols();
    let e = column_echelon(&w.transpose());
    if e.rank != m {
        return Err(Error::LinearSolve("basis vectors are linearly dependent".into()));
    }
    for k in 0..m {
        if !e.h.get(k, k).is_one() {
            return Err(Error::LinearSolve("sublattice is not saturated".into()));
        }
    }
    // W^T U = [H | 0]  =>  U^T W = [H^T; 0]; complete with the tail columns of (U^T)^{-1}.
    let v_inv = inverse_unimodular(&e.u.transpose())?;
    Ok(v_inv.select_columns(m..n))
}

/// Smallest nonnegative `(g, a, b)` with `a x + b y = g = gcd(x, y)`.
pub fn ext_gcd(x: &BigInt, y: &BigInt) -> (BigInt, BigInt, BigInt) {
    let e = x.extended_gcd(y);
    if e.gcd.is_negative() {
        (-e.gcd, -e.x, -e.y)
    } else {
        (e.gcd, e.x, e.y)
    }
}
