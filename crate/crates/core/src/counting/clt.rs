//! Weighted moments of occurrence vectors over `W_n^q`, compared against the
//! Gaussian limit with covariance given by the Hessian of `log lambda`.

use nalgebra::{DMatrix, DVector};

use super::dp::Budget;
use crate::calculus::{drift, hessian_log_lambda};
use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, VertexId};
use crate::scalar::Real;
use crate::transfer::SpectralData;

#[derive(Debug, Clone, PartialEq)]
pub struct CltReport<T: Real> {
    pub n: usize,
    /// `sum_w exp(-<theta, P(w)>)` over `W_n^q`.
    pub mass: T,
    /// Leading term `p <phi, 1_{Q_n^q}> f(q)` of the mass.
    pub predicted_mass: T,
    /// `(1/n) sum_w exp(-<theta, P(w)>) (P(w) - n x_theta)`.
    pub first_moment: DVector<T>,
    pub first_moment_norm: T,
    /// Weighted covariance of `(P(w) - n x_theta) / sqrt(n)` per unit mass, in an orthonormal basis of `E_0`.
    pub covariance_e0: DMatrix<T>,
    /// Hessian of `log lambda` in the same basis.
    pub hessian_e0: DMatrix<T>,
    /// `max |covariance - hessian| / max |hessian|`.
    pub covariance_error: T,
}

/// Exact weighted moments by a transfer recursion on (mass, first, second) moments.
pub fn clt_diagnostic<T: Real>(
    g: &DirectedGraph,
    sd: &SpectralData<T>,
    q: VertexId,
    n: usize,
    budget: &Budget,
) -> Result<CltReport<T>> {
    if n > budget.max_length {
        return Err(Error::BudgetExceeded(format!("length {n} exceeds the limit {}", budget.max_length)));
    }
    if n == 0 {
        return Err(Error::OutOfDomain("the diagnostic needs a positive length".into()));
    }
    if (sd.lambda - T::one()).abs() > T::lit(1e-8) {
        return Err(Error::OutOfDomain(format!("lambda(theta) = {} is not 1", sd.lambda)));
    }
    let (nv, na) = (g.num_vertices(), g.num_edges());
    let w: Vec<T> = sd.theta.iter().map(|t| (-*t).exp()).collect();
    let mut s0 = vec![T::zero(); nv];
    let mut s1 = vec![DVector::<T>::zeros(na); nv];
    let mut s2 = vec![DMatrix::<T>::zeros(na, na); nv];
    s0[q] = T::one();
    for _ in 0..n {
        let mut n0 = vec![T::zero(); nv];
        let mut n1 = vec![DVector::<T>::zeros(na); nv];
        let mut n2 = vec![DMatrix::<T>::zeros(na, na); nv];
        for a in 0..na {
            let (s, t) = (g.source(a), g.goal(a));
            if s0[s] == T::zero() {
                continue;
            }
            let wa = w[a];
            n0[t] += wa * s0[s];
            let mut m1 = s1[s].clone();
            m1[a] += s0[s];
            n1[t] += &m1 * wa;
            let mut m2 = s2[s].clone();
            for b in 0..na {
                m2[(a, b)] += s1[s][b];
                m2[(b, a)] += s1[s][b];
            }
            m2[(a, a)] += s0[s];
            n2[t] += m2 * wa;
        }
        s0 = n0;
        s1 = n1;
        s2 = n2;
    }
    let mass = s0.iter().fold(T::zero(), |acc, v| acc + *v);
    let m1 = s1.iter().fold(DVector::zeros(na), |acc, v| acc + v);
    let m2 = s2.iter().fold(DMatrix::zeros(na, na), |acc, v| acc + v);
    let nt = T::lit(n as f64);
    let x = drift(g, sd);
    let first = (&m1 - &x * (nt * mass)) / nt;
    // sum w (P - n x)(P - n x)^T / n
    let centred = (&m2 - &x * m1.transpose() * nt - &m1 * x.transpose() * nt + &x * x.transpose() * (nt * nt * mass)) / nt;
    let hess = hessian_log_lambda(g, sd)?;
    let basis = &hess.e0_basis;
    let covariance_e0 = basis.transpose() * centred * basis / mass;
    let hessian_e0 = hess.e0_gram.clone();
    let scale = hessian_e0.amax();
    let covariance_error = if scale > T::zero() { (&covariance_e0 - &hessian_e0).amax() / scale } else { covariance_e0.amax() };
    let ones = DVector::from_element(nv, T::one());
    Ok(CltReport {
        n,
        mass,
        predicted_mass: sd.power_asymptotics(n, q, &ones),
        first_moment_norm: first.amax(),
        first_moment: first,
        covariance_e0,
        hessian_e0,
        covariance_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::growth::Growth;

    #[test]
    fn fibonacci_moments_settle() {
        let g = fixtures::fibonacci();
        let gr = Growth::<f64>::new(&g).unwrap();
        let sd = gr.spectral(&DVector::from_element(3, gr.delta_g())).unwrap();
        let b = Budget::default();
        let r10 = clt_diagnostic(&g, &sd, 0, 10, &b).unwrap();
        let r20 = clt_diagnostic(&g, &sd, 0, 20, &b).unwrap();
        let r40 = clt_diagnostic(&g, &sd, 0, 40, &b).unwrap();
        assert!(r20.first_moment_norm <= 0.1);
        assert!(r20.first_moment_norm < r10.first_moment_norm);
        assert!(r40.covariance_error < r10.covariance_error);
        assert!(r40.covariance_error < 0.1, "{}", r40.covariance_error);
        assert!((r40.mass / r40.predicted_mass - 1.0).abs() < 1e-6);
    }

    #[test]
    fn cycle_is_deterministic() {
        let g = fixtures::cycle(3);
        let gr = Growth::<f64>::new(&g).unwrap();
        let sd = gr.spectral(&DVector::zeros(3)).unwrap();
        let r = clt_diagnostic(&g, &sd, 0, 9, &Budget::default()).unwrap();
        assert!(r.first_moment_norm < 1e-12);
        assert_eq!(r.covariance_e0.len(), 0);
    }

    #[test]
    fn requires_unit_lambda() {
        let g = fixtures::fibonacci();
        let gr = Growth::<f64>::new(&g).unwrap();
        let sd = gr.spectral(&DVector::zeros(3)).unwrap();
        assert!(matches!(clt_diagnostic(&g, &sd, 0, 5, &Budget::default()), Err(Error::OutOfDomain(_))));
    }
}
