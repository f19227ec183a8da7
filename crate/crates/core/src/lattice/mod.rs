//! Integer geometry of occurrence vectors: the lattice `Λ = Z^A`, its
//! intersections with `E_0` and `(nabla V)^perp`, the section `S` and the
//! normalizer `R`, and the lattice determinants entering local limit laws.

pub mod intmat;

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

pub use intmat::IntMatrix;
use intmat::{complete_basis, ext_gcd, image_basis, integer_kernel, inverse_unimodular};

use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, LabelledGraph, PeriodData, VertexId};
use crate::scalar::Real;

/// Corrections `R(q)` making occurrence vectors of paths between fixed
/// endpoints land in `(nabla V)^perp`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Normalizer {
    vectors: Vec<Vec<i64>>,
}

impl Normalizer {
    pub fn new(vectors: Vec<Vec<i64>>) -> Self {
        Self { vectors }
    }

    pub fn of(&self, q: VertexId) -> &[i64] {
        &self.vectors[q]
    }

    pub fn vectors(&self) -> &[Vec<i64>] {
        &self.vectors
    }

    /// `P - R(q') + R(q)`.
    pub fn normalize(&self, p: &[i64], q: VertexId, q_prime: VertexId) -> Vec<i64> {
        p.iter().enumerate().map(|(a, v)| v - self.vectors[q_prime][a] + self.vectors[q][a]).collect()
    }

    /// Inverse of [`Normalizer::normalize`]: `x + R(q') - R(q)`.
    pub fn raw(&self, x: &[i64], q: VertexId, q_prime: VertexId) -> Vec<i64> {
        x.iter().enumerate().map(|(a, v)| v + self.vectors[q_prime][a] - self.vectors[q][a]).collect()
    }

    /// `R(q') - R(q)`.
    pub fn offset(&self, q: VertexId, q_prime: VertexId) -> Vec<i64> {
        self.vectors[q_prime].iter().zip(&self.vectors[q]).map(|(a, b)| a - b).collect()
    }

    /// `<1, R(q') - R(q)>`.
    pub fn offset_total(&self, q: VertexId, q_prime: VertexId) -> i64 {
        self.offset(q, q_prime).iter().sum()
    }

    /// `1_a - R(goal a) + R(source a)` is orthogonal to `nabla V` for every edge.
    pub fn check_straightening(&self, g: &DirectedGraph) -> bool {
        (0..g.num_edges()).all(|a| {
            let v = self.normalize(&unit(g.num_edges(), a), g.source(a), g.goal(a));
            orthogonal_to_nabla(g, &v)
        })
    }

    /// `<1, R(q) - R(q')> = 0` whenever `q, q'` share a phase class.
    pub fn check_phase_constancy(&self, period: &PeriodData) -> bool {
        let n = self.vectors.len();
        (0..n).all(|q| {
            (0..n).all(|q2| period.phase[q] != period.phase[q2] || self.offset_total(q, q2) == 0)
        })
    }
}

fn unit(n: usize, a: usize) -> Vec<i64> {
    let mut v = vec![0; n];
    v[a] = 1;
    v
}

/// Exact test of `<nabla 1_h, v> = 0` for every vertex `h`, i.e. `v` is a circulation.
pub fn orthogonal_to_nabla(g: &DirectedGraph, v: &[i64]) -> bool {
    if v.len() != g.num_edges() {
        return false;
    }
    let mut balance = vec![0i64; g.num_vertices()];
    for a in 0..g.num_edges() {
        balance[g.goal(a)] += v[a];
        balance[g.source(a)] -= v[a];
    }
    balance.iter().all(|b| *b == 0)
}

/// Why a normalized target cannot be hit by any path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Infeasibility {
    /// `phase(q') - phase(q)` differs from `n` modulo `p`.
    Phase { period: usize },
    /// The target is not orthogonal to `nabla V`.
    Gauge,
    /// `<1, x + R(q') - R(q)>` differs from `n`.
    Length { expected: i64, got: i64 },
    /// The implied occurrence vector has a negative entry.
    Negative { edge: usize },
}

impl Infeasibility {
    pub fn reason(&self) -> &'static str {
        match self {
            Infeasibility::Phase { .. } => "phase",
            Infeasibility::Gauge => "gauge",
            Infeasibility::Length { .. } => "length",
            Infeasibility::Negative { .. } => "negative",
        }
    }
}

#[derive(Debug, Clone)]
pub struct LatticeFrame {
    pub period: PeriodData,
    /// Columns `nabla 1_q` for `q != q_0`: a basis of `nabla V` spanning `nabla Z^Q`.
    pub nabla_basis: IntMatrix,
    /// Basis of the circulation lattice `Λ ∩ (nabla V)^perp`.
    pub circulations: IntMatrix,
    /// Basis of `Λ ∩ E_0`; `r` columns.
    pub lattice_e0: IntMatrix,
    /// `nabla g_0 - 1/p`, with values in `{0, -1}`.
    pub f0: Vec<i64>,
    /// Section `S: E -> V` as a `|Q| x |A|` integer matrix.
    pub section: IntMatrix,
    pub normalizer: Normalizer,
}

impl LatticeFrame {
    pub fn build(g: &DirectedGraph) -> Result<Self> {
        let period = g.compute_period()?;
        let (nq, na) = (g.num_vertices(), g.num_edges());
        let nabla_rows = IntMatrix::from_fn(nq, na, |q, a| (g.goal(a) == q) as i64 - (g.source(a) == q) as i64);
        let circulations = canonical_signs(integer_kernel(&nabla_rows));
        let mut constraint = IntMatrix::zeros(nq + 1, na);
        for a in 0..na {
            constraint.set(0, a, BigInt::from(1));
            for q in 0..nq {
                constraint.set(q + 1, a, nabla_rows.get(q, a).clone());
            }
        }
        let lattice_e0 = canonical_signs(integer_kernel(&constraint));
        let p = period.period as i64;
        let f0: Vec<i64> = (0..na)
            .map(|a| (period.phase[g.goal(a)] as i64 - period.phase[g.source(a)] as i64 - 1) / p)
            .collect();

        let nabla_basis = nabla_rows.transpose().select_columns(1..nq);
        let mut w_cols = nabla_basis.columns();
        w_cols.push(f0.iter().map(|&v| BigInt::from(v)).collect());
        let w = IntMatrix::from_columns(na, &w_cols);
        let completion = complete_basis(&w)?;
        let full = w.hstack(&completion);
        let inv = inverse_unimodular(&full)?;
        // S maps nabla 1_q to 1_q (q != q_0) and f0 and the completion to zero.
        let mut s_basis = IntMatrix::zeros(nq, na);
        for q in 1..nq {
            s_basis.set(q, q - 1, BigInt::from(1));
        }
        let section = s_basis.mul(&inv);
        let normalizer = Normalizer::new(section.to_i64()?);
        Ok(Self { period, nabla_basis, circulations, lattice_e0, f0, section, normalizer })
    }

    /// `r = dim E_0`.
    pub fn r(&self) -> usize {
        self.lattice_e0.ncols()
    }

    /// Pre-screen for a normalized target `x` at length `n` between `q` and `q'`.
    pub fn prescreen(
        &self,
        g: &DirectedGraph,
        x: &[i64],
        n: usize,
        q: VertexId,
        q_prime: VertexId,
    ) -> std::result::Result<(), Infeasibility> {
        if !self.period.in_class(q, q_prime, n) {
            return Err(Infeasibility::Phase { period: self.period.period });
        }
        if !orthogonal_to_nabla(g, x) {
            return Err(Infeasibility::Gauge);
        }
        let got = x.iter().sum::<i64>() + self.normalizer.offset_total(q, q_prime);
        if got != n as i64 {
            return Err(Infeasibility::Length { expected: n as i64, got });
        }
        if let Some(edge) = self.normalizer.raw(x, q, q_prime).iter().position(|v| *v < 0) {
            return Err(Infeasibility::Negative { edge });
        }
        Ok(())
    }

    /// Some circulation with `<1, x> = total`, if any.
    pub fn circulation_with_total(&self, total: i64) -> Option<Vec<i64>> {
        let k = &self.circulations;
        let sums: Vec<BigInt> = (0..k.ncols()).map(|j| k.column(j).iter().sum()).collect();
        let coeffs = solve_linear_diophantine(&sums, &BigInt::from(total))?;
        let na = k.nrows();
        (0..na)
            .map(|a| {
                let v: BigInt = (0..k.ncols()).map(|j| k.get(a, j) * &coeffs[j]).sum();
                v.to_i64()
            })
            .collect()
    }

    /// Normalized target at length `n` nearest to `target` (Euclidean), among
    /// circulations with the right total. `None` when no such vector exists.
    pub fn nearest_target(&self, target: &DVector<f64>, n: usize, q: VertexId, q_prime: VertexId) -> Option<Vec<i64>> {
        if !self.period.in_class(q, q_prime, n) {
            return None;
        }
        let total = n as i64 - self.normalizer.offset_total(q, q_prime);
        let base = self.circulation_with_total(total)?;
        nearest_in_affine(&base, &self.lattice_e0, target)
    }
}

fn canonical_signs(m: IntMatrix) -> IntMatrix {
    let cols: Vec<Vec<BigInt>> = m
        .columns()
        .into_iter()
        .map(|c| match c.iter().find(|v| !v.is_zero()) {
            Some(v) if v.is_negative() => c.iter().map(|x| -x).collect(),
            _ => c,
        })
        .collect();
    IntMatrix::from_columns(m.nrows(), &cols)
}

/// Integers `c` with `sum c_i a_i = t`, if any.
fn solve_linear_diophantine(a: &[BigInt], t: &BigInt) -> Option<Vec<BigInt>> {
    let mut coeffs = vec![BigInt::zero(); a.len()];
    let mut g = BigInt::zero();
    for (i, ai) in a.iter().enumerate() {
        if ai.is_zero() {
            continue;
        }
        let (ng, x, y) = ext_gcd(&g, ai);
        for c in coeffs.iter_mut().take(i) {
            *c = &*c * &x;
        }
        coeffs[i] = y;
        g = ng;
    }
    if g.is_zero() {
        return t.is_zero().then_some(coeffs);
    }
    if !(t % &g).is_zero() {
        return None;
    }
    let k = t / &g;
    Some(coeffs.into_iter().map(|c| c * &k).collect())
}

/// Point of `base + span_Z(basis)` nearest to `target`: least-squares
/// coordinates rounded, then improved over the unit neighbourhood.
pub fn nearest_in_affine(base: &[i64], basis: &IntMatrix, target: &DVector<f64>) -> Option<Vec<i64>> {
    let r = basis.ncols();
    let b = basis.to_real::<f64>();
    let base_v = DVector::from_iterator(base.len(), base.iter().map(|&v| v as f64));
    let point = |z: &[i64]| -> Vec<i64> {
        (0..base.len())
            .map(|a| base[a] + (0..r).map(|j| basis.get(a, j).to_i64().unwrap_or(0) * z[j]).sum::<i64>())
            .collect()
    };
    if r == 0 {
        return Some(base.to_vec());
    }
    let gram = b.transpose() * &b;
    let rhs = b.transpose() * (target - &base_v);
    let z = gram.cholesky()?.solve(&rhs);
    let rounded: Vec<i64> = z.iter().map(|v| v.round() as i64).collect();
    let dist = |p: &[i64]| p.iter().zip(target.iter()).map(|(a, t)| (*a as f64 - t).powi(2)).sum::<f64>();
    let mut best = point(&rounded);
    let mut best_d = dist(&best);
    if r <= 6 {
        let mut offs = vec![-1i64; r];
        loop {
            let cand: Vec<i64> = rounded.iter().zip(&offs).map(|(a, o)| a + o).collect();
            let p = point(&cand);
            let d = dist(&p);
            if d < best_d - 1e-12 {
                best = p;
                best_d = d;
            }
            let mut i = 0;
            while i < r && offs[i] == 1 {
                offs[i] = -1;
                i += 1;
            }
            if i == r {
                break;
            }
            offs[i] += 1;
        }
    }
    Some(best)
}

/// `sqrt(det(D^T H D))` over the dual basis `D = B (B^T B)^{-1}` of the lattice
/// with basis `B`, i.e. the Gaussian normalisation per lattice cell. `1` when `B` is empty.
pub fn variance_factor<T: Real>(hessian: &DMatrix<T>, basis: &DMatrix<T>) -> Result<T> {
    if basis.ncols() == 0 {
        return Ok(T::one());
    }
    let gram = basis.transpose() * basis;
    let gram_inv = gram
        .try_inverse()
        .ok_or_else(|| Error::LinearSolve("lattice basis is degenerate".into()))?;
    variance_factor_direct(hessian, &(basis * gram_inv))
}

/// Walk lattice of a labelled graph: `pi(Λ ∩ E_0)` inside `Z^B`.
#[derive(Debug, Clone)]
pub struct SoficLattice {
    /// `|B| x s` basis.
    pub basis: IntMatrix,
    pub s: usize,
}

pub fn sofic_sublattice(frame: &LatticeFrame, lg: &LabelledGraph) -> SoficLattice {
    let na = lg.base().num_edges();
    let pi = IntMatrix::from_fn(lg.num_labels(), na, |b, a| (lg.label(a) == b) as i64);
    let basis = canonical_signs(image_basis(&pi.mul(&frame.lattice_e0)));
    let s = basis.ncols();
    SoficLattice { basis, s }
}

/// Variance factor for a labelled graph: the dual basis of the walk lattice,
/// pulled back to edge weights, evaluated on the Hessian of `log lambda`.
pub fn sofic_variance_factor<T: Real>(hessian: &DMatrix<T>, pullback: &DMatrix<T>, lattice: &SoficLattice) -> Result<T> {
    if lattice.s == 0 {
        return Ok(T::one());
    }
    let b = lattice.basis.to_real::<T>();
    let gram_inv = (b.transpose() * &b)
        .try_inverse()
        .ok_or_else(|| Error::LinearSolve("lattice basis is degenerate".into()))?;
    let dual = pullback * (b * gram_inv);
    variance_factor_direct(hessian, &dual)
}

fn variance_factor_direct<T: Real>(hessian: &DMatrix<T>, vectors: &DMatrix<T>) -> Result<T> {
    let form = vectors.transpose() * hessian * vectors;
    let form = (&form + form.transpose()) * T::lit(0.5);
    let chol = form
        .cholesky()
        .ok_or_else(|| Error::LinearSolve("Hessian is not positive definite on the lattice".into()))?;
    Ok(chol.l().diagonal().iter().fold(T::one(), |acc, d| acc * *d))
}
