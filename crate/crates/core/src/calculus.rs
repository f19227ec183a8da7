//! Derivatives of `lambda(theta)`: gradient, drift `x_theta`, the gauge
//! operator `nabla`, balanced decompositions and the Hessian of `log lambda`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::scalar::Real;
use crate::linalg::{complement_basis, lstsq};
use crate::transfer::SpectralData;

/// `(nabla h)(a) = h(goal a) - h(source a)`.
pub fn nabla<T: Real>(g: &DirectedGraph, h: &DVector<T>) -> DVector<T> {
    DVector::from_fn(g.num_edges(), |a, _| h[g.goal(a)] - h[g.source(a)])
}

/// `|A| x |Q|` matrix whose column `q` is `nabla 1_q`.
pub fn nabla_matrix<T: Real>(g: &DirectedGraph) -> DMatrix<T> {
    let mut m = DMatrix::zeros(g.num_edges(), g.num_vertices());
    for a in 0..g.num_edges() {
        m[(a, g.goal(a))] += T::one();
        m[(a, g.source(a))] -= T::one();
    }
    m
}

/// Orthonormal basis (as columns) of the orthogonal complement of the column span of `m`.
pub fn orthogonal_complement<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    let n = m.nrows();
    let mut cols: Vec<DVector<T>> = complement_basis(m, T::lit(T::DEFAULT_TOL)).into_iter().map(canonical_sign).collect();
    cols.sort_by_key(lead_index);
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

fn lead_index<T: Real>(v: &DVector<T>) -> usize {
    v.iter().position(|x| x.abs() > T::lit(1e-9)).unwrap_or(v.len())
}

fn canonical_sign<T: Real>(v: DVector<T>) -> DVector<T> {
    match v.iter().find(|x| x.abs() > T::lit(1e-9)) {
        Some(&x) if x < T::zero() => -v,
        _ => v,
    }
}

/// Columns `1, nabla 1_q` spanning `R1 + nabla V`.
pub fn gauge_generators<T: Real>(g: &DirectedGraph) -> DMatrix<T> {
    let nab = nabla_matrix::<T>(g);
    let mut m = DMatrix::zeros(g.num_edges(), g.num_vertices() + 1);
    m.column_mut(0).fill(T::one());
    m.columns_mut(1, g.num_vertices()).copy_from(&nab);
    m
}

/// Orthonormal basis of `E_0 = (R1 + nabla V)^perp`.
pub fn e0_basis<T: Real>(g: &DirectedGraph) -> DMatrix<T> {
    orthogonal_complement(&gauge_generators::<T>(g))
}

/// Orthonormal basis of `(nabla V)^perp`.
pub fn nabla_perp_basis<T: Real>(g: &DirectedGraph) -> DMatrix<T> {
    orthogonal_complement(&nabla_matrix::<T>(g))
}

/// Orthogonal projection of `v` onto `nabla V`.
pub fn project_nabla<T: Real>(g: &DirectedGraph, v: &DVector<T>) -> DVector<T> {
    let perp = nabla_perp_basis::<T>(g);
    v - &perp * (perp.transpose() * v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientData<T: Real> {
    /// `d lambda / d theta(a) = -phi(source a) exp(-theta(a)) f(goal a)`.
    pub grad_lambda: DVector<T>,
    /// `d log lambda = -x_theta`.
    pub grad_log_lambda: DVector<T>,
    /// Drift `x_theta`; nonnegative with `<1, x_theta> = 1`.
    pub drift: DVector<T>,
}

/// `exp(-theta(a)) / lambda`, computed in log space.
fn normalized_weights<T: Real>(sd: &SpectralData<T>) -> DVector<T> {
    let ll = sd.log_lambda();
    sd.theta.map(|t| (-t - ll).exp())
}

/// Drift `x_theta(a) = phi(source a) exp(-theta(a)) f(goal a) / lambda`.
pub fn drift<T: Real>(g: &DirectedGraph, sd: &SpectralData<T>) -> DVector<T> {
    let w = normalized_weights(sd);
    DVector::from_fn(g.num_edges(), |a, _| sd.phi[g.source(a)] * w[a] * sd.f[g.goal(a)])
}

pub fn grad_lambda<T: Real>(g: &DirectedGraph, sd: &SpectralData<T>) -> GradientData<T> {
    let x = drift(g, sd);
    GradientData { grad_lambda: &x * -sd.lambda, grad_log_lambda: -&x, drift: x }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalancedDecomposition<T: Real> {
    pub c: T,
    /// Potential on vertices, pinned by `g(q_0) = 0`.
    pub g: DVector<T>,
    pub balanced: DVector<T>,
}

/// `q -> sum_{source a = q} exp(-theta(a)) xi(a) f(goal a) / lambda`.
pub fn balance_defect<T: Real>(g: &DirectedGraph, sd: &SpectralData<T>, xi: &DVector<T>) -> DVector<T> {
    let w = normalized_weights(sd);
    let mut out = DVector::zeros(g.num_vertices());
    for a in 0..g.num_edges() {
        out[g.source(a)] += w[a] * xi[a] * sd.f[g.goal(a)];
    }
    out
}

/// Writes `xi = c 1 + nabla g + balanced` with `balanced` theta-balanced.
pub fn balanced_decompose<T: Real>(
    g: &DirectedGraph,
    sd: &SpectralData<T>,
    xi: &DVector<T>,
) -> Result<BalancedDecomposition<T>> {
    if xi.len() != g.num_edges() {
        return Err(Error::DimensionMismatch { expected: g.num_edges(), got: xi.len() });
    }
    let nq = g.num_vertices();
    let defect = balance_defect(g, sd, xi);
    let c = sd.phi.dot(&defect);
    // (P - I) h = defect - c f with P = L / lambda, h = g f, h(q_0) = 0.
    let w = normalized_weights(sd);
    let mut sys = DMatrix::<T>::zeros(nq + 1, nq);
    for a in 0..g.num_edges() {
        sys[(g.source(a), g.goal(a))] += w[a];
    }
    for q in 0..nq {
        sys[(q, q)] -= T::one();
    }
    sys[(nq, 0)] = T::one();
    let mut rhs = DVector::<T>::zeros(nq + 1);
    rhs.rows_mut(0, nq).copy_from(&(&defect - &sd.f * c));
    let h = lstsq(&sys, &rhs)?;
    // Remove the residual component along the kernel so the pin is exact.
    let mut h = &h - &sd.f * (h[0] / sd.f[0]);
    h[0] = T::zero();
    let pot = h.component_div(&sd.f);
    let balanced = xi - DVector::from_element(xi.len(), c) - nabla(g, &pot);
    Ok(BalancedDecomposition { c, g: pot, balanced })
}

/// Hessian of `log lambda` at `theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct HessianForm<T: Real> {
    /// `|A| x |A|` symmetric matrix in the edge basis.
    pub matrix: DMatrix<T>,
    /// Orthonormal basis of `E_0`, as columns.
    pub e0_basis: DMatrix<T>,
    /// Restriction to `E_0` in that basis.
    pub e0_gram: DMatrix<T>,
}

impl<T: Real> HessianForm<T> {
    pub fn eval(&self, xi: &DVector<T>, eta: &DVector<T>) -> T {
        xi.dot(&(&self.matrix * eta))
    }

    /// Gram matrix `B^T H B` for vectors given as columns of `basis`.
    pub fn gram(&self, basis: &DMatrix<T>) -> DMatrix<T> {
        basis.transpose() * &self.matrix * basis
    }

    pub fn r(&self) -> usize {
        self.e0_basis.ncols()
    }
}

/// On balanced `xi, eta` the form is `sum_a x_theta(a) xi(a) eta(a)`; it is
/// extended to `E` through the balanced projection, which kills `R1 + nabla V`.
pub fn hessian_log_lambda<T: Real>(g: &DirectedGraph, sd: &SpectralData<T>) -> Result<HessianForm<T>> {
    let na = g.num_edges();
    let x = drift(g, sd);
    let mut proj = DMatrix::<T>::zeros(na, na);
    for a in 0..na {
        let mut e = DVector::zeros(na);
        e[a] = T::one();
        proj.set_column(a, &balanced_decompose(g, sd, &e)?.balanced);
    }
    let weighted = DMatrix::from_fn(na, na, |i, j| x[i] * proj[(i, j)]);
    let h = proj.transpose() * weighted;
    let matrix = (&h + h.transpose()) * T::lit(0.5);
    let e0_basis = e0_basis::<T>(g);
    let e0_gram = e0_basis.transpose() * &matrix * &e0_basis;
    Ok(HessianForm { matrix, e0_basis, e0_gram })
}
