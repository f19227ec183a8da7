//! Exact directional counts and their local-limit predictions.

pub mod clt;
pub mod dp;

use nalgebra::{DMatrix, DVector};
use num_bigint::{BigInt, BigUint};
use num_traits::{ToPrimitive, Zero};

pub use clt::{clt_diagnostic, CltReport};
pub use dp::{count_distribution, count_targeted, edge_coords, enumerate_distribution, walk_counts, Budget, BUDGET_ENV};

use crate::calculus::hessian_log_lambda;
use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, LabelledGraph, VertexId};
use crate::growth::{Growth, GrowthProfile, Psi, SoficGrowth, SolverOptions};
use crate::linalg::lstsq;
use crate::lattice::intmat::{column_echelon, image_basis, IntMatrix};
use crate::lattice::{nearest_in_affine, sofic_sublattice, sofic_variance_factor, variance_factor, Infeasibility, LatticeFrame, SoficLattice};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    FiniteType,
    Sofic,
}

/// Count `N_n(x, q, q')` of words in `W_n^{q,q'}` with `P(w) - R(q') + R(q) = x`
/// (or, for sofic languages, with `pi` of that vector equal to `x`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountQuery {
    pub n: usize,
    pub q: VertexId,
    pub q_prime: VertexId,
    /// Normalized target.
    pub target: Vec<i64>,
}

/// Why no prediction is made.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Refusal {
    Infeasible(Infeasibility),
    /// `psi <= 0` or `-infinity`: outside the interior of the cone.
    PsiNotPositive,
    /// The minimizer ran off to infinity: the target sits on the boundary of the cone.
    Boundary,
}

impl Refusal {
    pub fn reason(&self) -> &'static str {
        match self {
            Refusal::Infeasible(i) => i.reason(),
            Refusal::PsiNotPositive => "psi",
            Refusal::Boundary => "boundary",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction<T: Real> {
    pub value: Option<T>,
    pub log_value: Option<T>,
    pub refusal: Option<Refusal>,
    pub psi: Option<Psi<T>>,
    pub theta_star: Option<DVector<T>>,
    pub sigma: Option<T>,
    /// `r` (finite type) or `s` (sofic).
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountReport<T: Real> {
    pub query: CountQuery,
    pub exact: BigUint,
    pub prediction: Prediction<T>,
    pub ratio: Option<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport<T: Real> {
    pub rows: Vec<CountReport<T>>,
    pub dim: usize,
    /// Fitted `b` in `log exact ~ a + b n + c log n`.
    pub growth_rate: Option<T>,
    /// `psi(d) / <1, d>` for the ray direction `d`.
    pub expected_growth_rate: Option<T>,
    /// Fitted `c` in `log exact - psi(x_n) ~ a + c log n`.
    pub exponent: Option<T>,
    pub expected_exponent: T,
    /// `|ratio - 1|` decreases over the last three rows with a ratio.
    pub tail_monotone: bool,
}

struct SoficContext<'g, T: Real> {
    growth: SoficGrowth<'g, T>,
    lattice: SoficLattice,
    /// Echelon basis of `pi(Λ ∩ (nabla V)^perp)`.
    circulation_image: IntMatrix,
}

/// Exact counts and predictions for one graph.
pub struct Predictor<'g, T: Real> {
    graph: &'g DirectedGraph,
    labelled: Option<&'g LabelledGraph>,
    frame: LatticeFrame,
    growth: Growth<'g, T>,
    sofic: Option<SoficContext<'g, T>>,
    hessian_basis: DMatrix<T>,
    pub budget: Budget,
}

fn big_to<T: Real>(v: &BigUint) -> T {
    T::lit(v.to_f64().unwrap_or(f64::INFINITY))
}

impl<'g, T: Real> Predictor<'g, T> {
    pub fn new(graph: &'g DirectedGraph) -> Result<Self> {
        let frame = LatticeFrame::build(graph)?;
        let hessian_basis = frame.lattice_e0.to_real();
        Ok(Self { graph, labelled: None, frame, growth: Growth::new(graph)?, sofic: None, hessian_basis, budget: Budget::default() })
    }

    pub fn sofic(labelled: &'g LabelledGraph) -> Result<Self> {
        let graph = labelled.base();
        let mut p = Self::new(graph)?;
        let lattice = sofic_sublattice(&p.frame, labelled);
        let pi = IntMatrix::from_fn(labelled.num_labels(), graph.num_edges(), |b, a| (labelled.label(a) == b) as i64);
        let circulation_image = image_basis(&pi.mul(&p.frame.circulations));
        p.labelled = Some(labelled);
        p.sofic = Some(SoficContext { growth: SoficGrowth::new(labelled)?, lattice, circulation_image });
        Ok(p)
    }

    pub fn with_budget(mut self, budget: Budget) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_solver_options(mut self, options: SolverOptions<T>) -> Self {
        self.growth = self.growth.with_options(options);
        if let Some(s) = self.sofic.take() {
            self.sofic = Some(SoficContext { growth: s.growth.with_options(options), ..s });
        }
        self
    }

    pub fn mode(&self) -> Mode {
        if self.sofic.is_some() {
            Mode::Sofic
        } else {
            Mode::FiniteType
        }
    }

    pub fn graph(&self) -> &'g DirectedGraph {
        self.graph
    }

    pub fn frame(&self) -> &LatticeFrame {
        &self.frame
    }

    pub fn growth(&self) -> &Growth<'g, T> {
        &self.growth
    }

    pub fn sofic_growth(&self) -> Option<&SoficGrowth<'g, T>> {
        self.sofic.as_ref().map(|s| &s.growth)
    }

    pub fn sofic_lattice(&self) -> Option<&SoficLattice> {
        self.sofic.as_ref().map(|s| &s.lattice)
    }

    /// `r` or `s`.
    pub fn dim(&self) -> usize {
        match &self.sofic {
            Some(s) => s.lattice.s,
            None => self.frame.r(),
        }
    }

    /// Edge-to-coordinate map of the counted vectors.
    pub fn coords(&self) -> Vec<usize> {
        match self.labelled {
            Some(lg) => lg.labelling().to_vec(),
            None => edge_coords(self.graph),
        }
    }

    pub fn num_coords(&self) -> usize {
        self.labelled.map_or(self.graph.num_edges(), LabelledGraph::num_labels)
    }

    /// `R(q') - R(q)` in counted coordinates.
    fn offset(&self, q: VertexId, q_prime: VertexId) -> Vec<i64> {
        let off = self.frame.normalizer.offset(q, q_prime);
        match self.labelled {
            Some(lg) => lg.project_counts(&off),
            None => off,
        }
    }

    /// Raw counted vector `x + (R(q') - R(q))`, projected for sofic languages.
    pub fn raw_target(&self, query: &CountQuery) -> Vec<i64> {
        query.target.iter().zip(self.offset(query.q, query.q_prime)).map(|(x, o)| x + o).collect()
    }

    pub fn prescreen(&self, query: &CountQuery) -> std::result::Result<(), Infeasibility> {
        let Some(s) = &self.sofic else {
            return self.frame.prescreen(self.graph, &query.target, query.n, query.q, query.q_prime);
        };
        if !self.frame.period.in_class(query.q, query.q_prime, query.n) {
            return Err(Infeasibility::Phase { period: self.frame.period.period });
        }
        if !lattice_contains(&s.circulation_image, &query.target) {
            return Err(Infeasibility::Gauge);
        }
        let raw = self.raw_target(query);
        let got: i64 = raw.iter().sum();
        if got != query.n as i64 {
            return Err(Infeasibility::Length { expected: query.n as i64, got });
        }
        if let Some(edge) = raw.iter().position(|v| *v < 0) {
            return Err(Infeasibility::Negative { edge });
        }
        Ok(())
    }

    /// Vertex range and target dimension.
    pub fn check_query(&self, query: &CountQuery) -> Result<()> {
        let nv = self.graph.num_vertices();
        for v in [query.q, query.q_prime] {
            if v >= nv {
                return Err(Error::UnknownVertex(v));
            }
        }
        if query.target.len() != self.num_coords() {
            return Err(Error::DimensionMismatch { expected: self.num_coords(), got: query.target.len() });
        }
        Ok(())
    }

    /// Exact count by dynamic programming.
    pub fn exact(&self, query: &CountQuery) -> Result<BigUint> {
        self.check_query(query)?;
        let raw = self.raw_target(query);
        count_targeted(self.graph, &self.coords(), &raw, query.n, query.q, query.q_prime, &self.budget)
    }

    fn profile(&self, target: &DVector<T>) -> Result<GrowthProfile<T>> {
        match &self.sofic {
            Some(s) => s.growth.psi(target),
            None => self.growth.psi(target),
        }
    }

    /// `p exp(<theta, R(q') - R(q)>) phi_theta(q') f_theta(q)`.
    pub fn endpoint_factor(&self, theta: &DVector<T>, q: VertexId, q_prime: VertexId) -> Result<T> {
        let sd = self.growth.spectral(theta)?;
        Ok(self.log_endpoint_factor(&sd, theta, q, q_prime).exp())
    }

    fn log_endpoint_factor(&self, sd: &crate::transfer::SpectralData<T>, theta: &DVector<T>, q: VertexId, q_prime: VertexId) -> T {
        let off = self.frame.normalizer.offset(q, q_prime);
        let pair = off.iter().enumerate().fold(T::zero(), |acc, (a, v)| acc + theta[a] * T::lit(*v as f64));
        T::lit(self.frame.period.period as f64).ln() + pair + sd.phi[q_prime].ln() + sd.f[q].ln()
    }

    /// Leading term of the local limit law at the weight `theta` (with `lambda(theta) = 1`) and value `psi`.
    pub fn predict_at(&self, query: &CountQuery, theta: &DVector<T>, psi: T) -> Result<(T, T)> {
        let sd = self.growth.spectral(theta)?;
        let hess = hessian_log_lambda(self.graph, &sd)?.matrix;
        let sigma = match &self.sofic {
            Some(s) => sofic_variance_factor(&hess, s.growth.pullback(), &s.lattice)?,
            None => variance_factor(&hess, &self.hessian_basis)?,
        };
        let n = T::lit(query.n as f64);
        let log_value = -T::lit(self.dim() as f64 / 2.0) * (T::two_pi() * n).ln() - sigma.ln()
            + psi
            + self.log_endpoint_factor(&sd, theta, query.q, query.q_prime);
        Ok((log_value, sigma))
    }

    pub fn predict(&self, query: &CountQuery) -> Result<Prediction<T>> {
        self.check_query(query)?;
        let dim = self.dim();
        let refused = |refusal, psi, theta_star| Prediction {
            value: None,
            log_value: None,
            refusal: Some(refusal),
            psi,
            theta_star,
            sigma: None,
            dim,
        };
        if let Err(inf) = self.prescreen(query) {
            return Ok(refused(Refusal::Infeasible(inf), None, None));
        }
        let x = DVector::from_iterator(query.target.len(), query.target.iter().map(|v| T::lit(*v as f64)));
        if x.iter().all(|v| *v == T::zero()) {
            return Ok(refused(Refusal::PsiNotPositive, Some(Psi::Finite(T::zero())), None));
        }
        let profile = self.profile(&x)?;
        let psi = match profile.psi {
            Psi::Finite(v) if v > T::lit(T::SOLVER_TOL) => v,
            other => return Ok(refused(Refusal::PsiNotPositive, Some(other), profile.theta_star)),
        };
        if profile.boundary {
            return Ok(refused(Refusal::Boundary, Some(profile.psi), profile.theta_star));
        }
        let theta = profile.theta_star.expect("finite psi carries a minimizer");
        let (log_value, sigma) = self.predict_at(query, &theta, psi)?;
        Ok(Prediction {
            value: Some(log_value.exp()),
            log_value: Some(log_value),
            refusal: None,
            psi: Some(Psi::Finite(psi)),
            theta_star: Some(theta),
            sigma: Some(sigma),
            dim,
        })
    }

    pub fn report(&self, query: &CountQuery) -> Result<CountReport<T>> {
        let exact = self.exact(query)?;
        let prediction = self.predict(query)?;
        let ratio = prediction.value.filter(|v| *v > T::zero()).map(|v| big_to::<T>(&exact) / v);
        Ok(CountReport { query: query.clone(), exact, prediction, ratio })
    }

    /// Feasible normalized target at length `n` nearest to the ray through `direction`.
    pub fn nearest_target(&self, direction: &DVector<f64>, n: usize, q: VertexId, q_prime: VertexId) -> Option<Vec<i64>> {
        if !self.frame.period.in_class(q, q_prime, n) {
            return None;
        }
        let total = n as i64 - self.frame.normalizer.offset_total(q, q_prime);
        let sum = direction.sum();
        if sum <= 0.0 {
            return None;
        }
        let target = direction * (total as f64 / sum);
        match (&self.sofic, self.labelled) {
            (Some(s), Some(lg)) => {
                let base = lg.project_counts(&self.frame.circulation_with_total(total)?);
                nearest_in_affine(&base, &s.lattice.basis, &target)
            }
            _ => self.frame.nearest_target(&target, n, q, q_prime),
        }
    }

    /// Reports along the ray through `direction` at the given lengths; infeasible lengths are skipped.
    pub fn convergence_report(
        &self,
        direction: &DVector<f64>,
        q: VertexId,
        q_prime: VertexId,
        lengths: &[usize],
    ) -> Result<ConvergenceReport<T>> {
        let mut rows = Vec::new();
        for &n in lengths {
            let Some(target) = self.nearest_target(direction, n, q, q_prime) else { continue };
            let query = CountQuery { n, q, q_prime, target };
            if self.prescreen(&query).is_err() {
                continue;
            }
            rows.push(self.report(&query)?);
        }
        let d = DVector::from_iterator(direction.len(), direction.iter().map(|v| T::lit(*v)));
        let expected_growth_rate = self.profile(&d).ok().and_then(|p| p.psi.finite()).map(|v| v / d.sum());
        let positive: Vec<&CountReport<T>> = rows.iter().filter(|r| !r.exact.is_zero()).collect();
        let ln = |r: &CountReport<T>| big_ln(&r.exact);
        let growth_rate = fit(
            &positive.iter().map(|r| vec![1.0, r.query.n as f64, (r.query.n as f64).ln()]).collect::<Vec<_>>(),
            &positive.iter().map(|r| ln(r)).collect::<Vec<_>>(),
        )
        .map(|c| T::lit(c[1]));
        let with_psi: Vec<(&CountReport<T>, f64)> = positive
            .iter()
            .filter_map(|r| r.prediction.psi.and_then(|p| p.finite()).map(|p| (*r, p.to_f64_lossy())))
            .collect();
        let exponent = fit(
            &with_psi.iter().map(|(r, _)| vec![1.0, (r.query.n as f64).ln()]).collect::<Vec<_>>(),
            &with_psi.iter().map(|(r, p)| ln(r) - p).collect::<Vec<_>>(),
        )
        .map(|c| T::lit(c[1]));
        let errs: Vec<T> = rows.iter().filter_map(|r| r.ratio).map(|v| (v - T::one()).abs()).collect();
        let tail_monotone = errs.len() >= 3 && errs[errs.len() - 3..].windows(2).all(|w| w[1] < w[0]);
        Ok(ConvergenceReport {
            rows,
            dim: self.dim(),
            growth_rate,
            expected_growth_rate,
            exponent,
            expected_exponent: -T::lit(self.dim() as f64 / 2.0),
            tail_monotone,
        })
    }
}

fn big_ln(v: &BigUint) -> f64 {
    let bits = v.bits();
    if bits < 1000 {
        v.to_f64().unwrap_or(f64::INFINITY).ln()
    } else {
        let shift = bits - 64;
        (v >> shift).to_f64().unwrap_or(f64::INFINITY).ln() + shift as f64 * std::f64::consts::LN_2
    }
}

/// Least-squares coefficients; `None` with fewer rows than unknowns.
fn fit(rows: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let k = rows.first()?.len();
    if rows.len() < k {
        return None;
    }
    let a = DMatrix::from_fn(rows.len(), k, |i, j| rows[i][j]);
    let b = DVector::from_row_slice(rhs);
    lstsq(&a, &b).ok().map(|sol| sol.iter().copied().collect())
}

/// `v` lies in the lattice spanned by the columns of `basis`.
pub fn lattice_contains(basis: &IntMatrix, v: &[i64]) -> bool {
    if v.len() != basis.nrows() {
        return false;
    }
    let e = column_echelon(basis);
    let h = e.h;
    let mut residual: Vec<BigInt> = v.iter().map(|&x| BigInt::from(x)).collect();
    for (j, &row) in e.pivot_rows.iter().enumerate() {
        let piv = h.get(row, j);
        if !(&residual[row] % piv).is_zero() {
            return false;
        }
        let c = &residual[row] / piv;
        for (i, r) in residual.iter_mut().enumerate() {
            *r -= &c * h.get(i, j);
        }
    }
    residual.iter().all(Zero::is_zero)
}

/// `|W_n^q|`.
pub fn global_count_exact(g: &DirectedGraph, n: usize, q: VertexId) -> BigUint {
    walk_counts(g, n, q).into_iter().sum()
}

/// `p exp(delta n) <phi, 1_{Q_n^q}> f(q)` at `theta = delta 1`.
pub fn global_count_predicted<T: Real>(growth: &Growth<'_, T>, n: usize, q: VertexId) -> Result<T> {
    let g = growth.graph();
    let sd = growth.spectral(&DVector::from_element(g.num_edges(), growth.delta_g()))?;
    let ones = DVector::from_element(g.num_vertices(), T::one());
    Ok(sd.power_asymptotics(n, q, &ones) / sd.lambda.powi(n as i32) * (growth.delta_g() * T::lit(n as f64)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn fibonacci_count_report() {
        let g = fixtures::fibonacci();
        let p = Predictor::<f64>::new(&g).unwrap();
        let q = CountQuery { n: 4, q: 0, q_prime: 0, target: vec![2, 1, 1] };
        let r = p.report(&q).unwrap();
        assert_eq!(r.exact, BigUint::from(3u32));
        assert!(r.prediction.value.unwrap() > 0.0);
    }

    #[test]
    fn refusals() {
        let g = fixtures::bipartite();
        let p = Predictor::<f64>::new(&g).unwrap();
        let q = CountQuery { n: 3, q: 0, q_prime: 0, target: vec![0; 6] };
        let r = p.report(&q).unwrap();
        assert!(r.exact.is_zero());
        assert_eq!(r.prediction.refusal.unwrap().reason(), "phase");
        let f = fixtures::fibonacci();
        let p = Predictor::<f64>::new(&f).unwrap();
        let q = CountQuery { n: 3, q: 0, q_prime: 0, target: vec![3, 0, 0] };
        let r = p.report(&q).unwrap();
        assert_eq!(r.exact, BigUint::from(1u32));
        assert_eq!(r.prediction.refusal.unwrap().reason(), "psi");
    }

    #[test]
    fn full_shift_stirling() {
        let g = fixtures::full_shift(2);
        let p = Predictor::<f64>::new(&g).unwrap();
        let n = 36;
        let q = CountQuery { n, q: 0, q_prime: 0, target: vec![18, 18] };
        let r = p.report(&q).unwrap();
        let stirling = 2f64.powi(n as i32) * (2.0 / (std::f64::consts::PI * n as f64)).sqrt();
        assert!((r.prediction.value.unwrap() / stirling - 1.0).abs() < 1e-9);
        assert!((r.ratio.unwrap() - 1.0).abs() < 0.02);
    }

    #[test]
    fn lattice_membership() {
        let b = IntMatrix::from_fn(2, 1, |i, _| if i == 0 { 2 } else { -2 });
        assert!(lattice_contains(&b, &[4, -4]));
        assert!(!lattice_contains(&b, &[1, -1]));
        assert!(!lattice_contains(&b, &[2, 2]));
    }

    #[test]
    fn global_counts() {
        let g = fixtures::fibonacci();
        let gr = Growth::<f64>::new(&g).unwrap();
        let exact = global_count_exact(&g, 25, 0).to_f64().unwrap();
        let pred = global_count_predicted(&gr, 25, 0).unwrap();
        assert!((exact / pred - 1.0).abs() < 0.01);
    }
}
