//! Growth indicator `psi` by convex duality:
//! `psi(x) = inf_theta <theta, x> + <1, x> log lambda(theta)`.
//!
//! The objective is invariant along `R1 + nabla V` once `x` is orthogonal to
//! `nabla V`, so Newton's method runs on `delta 1 + E_0` (or on the pulled-back
//! label weights for sofic languages).

use nalgebra::{DMatrix, DVector};

use crate::calculus::{drift, e0_basis, gauge_generators, hessian_log_lambda, orthogonal_complement, project_nabla};
use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, LabelledGraph, PeriodData};
use crate::linalg::lstsq;
use crate::scalar::Real;
use crate::transfer::{log_perron_value, perron_data_with, EigenMethod, SpectralData};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Psi<T> {
    Finite(T),
    NegInfinity,
}

impl<T: Real> Psi<T> {
    pub fn finite(self) -> Option<T> {
        match self {
            Psi::Finite(v) => Some(v),
            Psi::NegInfinity => None,
        }
    }

    pub fn to_f64(self) -> f64 {
        self.finite().map_or(f64::NEG_INFINITY, |v| v.to_f64_lossy())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivergenceKind {
    /// A coordinate of the direction is negative.
    NegativeCoordinate(usize),
    /// The direction has a component along a gauge direction the objective is linear in.
    GaugeComponent,
    /// The objective has negative recession slope along the ray.
    Unbounded,
}

/// Proof that `psi = -infinity`: the objective decreases at rate `-slope` along `ray`.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceCertificate<T: Real> {
    pub kind: DivergenceKind,
    /// In edge-weight space, or label-weight space for sofic problems.
    pub ray: DVector<T>,
    pub slope: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthProfile<T: Real> {
    pub direction: DVector<T>,
    pub psi: Psi<T>,
    /// Minimizer with `lambda(theta_star) = 1` (edge weights).
    pub theta_star: Option<DVector<T>>,
    /// Label weights `f` with `theta_star = pi^* f`, sofic problems only.
    pub label_weights: Option<DVector<T>>,
    /// Unique edge direction attaining the sofic supremum, scaled like `direction`.
    pub attaining: Option<DVector<T>>,
    pub converged: bool,
    /// Converged with the minimizer far out, i.e. `direction` near the cone boundary.
    pub boundary: bool,
    pub iterations: usize,
    pub gradient_norm: T,
    /// `||x / <1,x> - x_theta_star||_inf` (projected by `pi` for sofic problems).
    pub stationarity: Option<T>,
    pub certificate: Option<DivergenceCertificate<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions<T> {
    /// Infinity-norm gradient tolerance.
    pub tol: T,
    pub max_iter: usize,
    pub method: EigenMethod,
    /// Longest Newton step in the reduced coordinates.
    pub step_cap: T,
    /// Iterate norm beyond which divergence certificates are tried.
    pub divergence_radius: T,
    /// Iterate norm beyond which a converged solution is flagged as boundary.
    pub boundary_radius: T,
    /// Relative size of a gauge component treated as nonzero.
    pub gauge_tol: T,
}

impl<T: Real> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(T::SOLVER_TOL),
            max_iter: 200,
            method: EigenMethod::Auto,
            step_cap: T::lit(10.0),
            divergence_radius: T::lit(20.0),
            boundary_radius: T::lit(10.0),
            gauge_tol: T::lit(1e-9),
        }
    }
}

/// Minimum mean weight over cycles, by Karp's algorithm. The graph must be strongly connected.
pub fn min_cycle_mean<T: Real>(g: &DirectedGraph, w: &DVector<T>) -> T {
    let n = g.num_vertices();
    let inf = T::max_value().expect("bounded");
    let mut d = vec![vec![inf; n]; n + 1];
    d[0][0] = T::zero();
    for k in 1..=n {
        for a in 0..g.num_edges() {
            let (s, t) = (g.source(a), g.goal(a));
            if d[k - 1][s] < inf {
                let cand = d[k - 1][s] + w[a];
                if cand < d[k][t] {
                    d[k][t] = cand;
                }
            }
        }
    }
    let mut best = inf;
    for v in 0..n {
        if d[n][v] == inf {
            continue;
        }
        let mut worst = -inf;
        for k in 0..n {
            if d[k][v] < inf {
                worst = worst.max((d[n][v] - d[k][v]) / T::lit((n - k) as f64));
            }
        }
        best = best.min(worst);
    }
    best
}

/// `F(t) = base + <lin, t> + log lambda(theta0 + M t)`, direction normalized to `<1, x> = 1`.
struct Program<T: Real> {
    theta0: DVector<T>,
    m: DMatrix<T>,
    lin: DVector<T>,
    base: T,
}

impl<T: Real> Program<T> {
    fn theta(&self, t: &DVector<T>) -> DVector<T> {
        &self.theta0 + &self.m * t
    }
}

enum Outcome<T: Real> {
    Converged { t: DVector<T>, sd: SpectralData<T>, iterations: usize, grad: T },
    Diverged { ray_t: DVector<T>, slope: T, iterations: usize },
}

/// Solver context for one graph.
#[derive(Debug, Clone)]
pub struct Growth<'g, T: Real> {
    graph: &'g DirectedGraph,
    period: PeriodData,
    e0: DMatrix<T>,
    delta: T,
    pub options: SolverOptions<T>,
}

impl<'g, T: Real> Growth<'g, T> {
    pub fn new(graph: &'g DirectedGraph) -> Result<Self> {
        let period = graph.compute_period()?;
        let delta = log_perron_value(graph, &DVector::zeros(graph.num_edges()))?;
        Ok(Self { graph, period, e0: e0_basis(graph), delta, options: SolverOptions::default() })
    }

    pub fn with_options(mut self, options: SolverOptions<T>) -> Self {
        self.options = options;
        self
    }

    pub fn graph(&self) -> &'g DirectedGraph {
        self.graph
    }

    pub fn period(&self) -> &PeriodData {
        &self.period
    }

    /// `delta_G = log lambda(0)`.
    pub fn delta_g(&self) -> T {
        self.delta
    }

    pub fn spectral(&self, theta: &DVector<T>) -> Result<SpectralData<T>> {
        perron_data_with(self.graph, &self.period, theta, T::lit(T::DEFAULT_TOL), self.options.method)
    }

    /// `theta` lies in `Omega_G`, i.e. `lambda(theta) <= 1 + tol`.
    pub fn omega_contains(&self, theta: &DVector<T>, tol: T) -> Result<bool> {
        Ok(log_perron_value(self.graph, theta)? <= (T::one() + tol).ln())
    }

    /// Unique maximizer of `psi` on the simplex, the drift at `delta_G 1`.
    pub fn x_g(&self) -> Result<DVector<T>> {
        if self.graph.is_cyclic() {
            let na = self.graph.num_edges();
            return Err(Error::CyclicGraph { direction: vec![1.0 / na as f64; na] });
        }
        let sd = self.spectral(&DVector::from_element(self.graph.num_edges(), self.delta))?;
        Ok(drift(self.graph, &sd))
    }

    pub fn psi(&self, x: &DVector<T>) -> Result<GrowthProfile<T>> {
        let g = self.graph;
        if x.len() != g.num_edges() {
            return Err(Error::DimensionMismatch { expected: g.num_edges(), got: x.len() });
        }
        if x.iter().all(|v| *v == T::zero()) {
            return Err(Error::ZeroDirection);
        }
        if let Some(a) = x.iter().position(|v| *v < T::zero()) {
            let mut ray = DVector::zeros(x.len());
            ray[a] = T::one();
            return Ok(diverged(x, DivergenceKind::NegativeCoordinate(a), ray, x[a], 0));
        }
        let s = x.sum();
        let gauge = project_nabla(g, x);
        if gauge.norm() > self.options.gauge_tol * x.norm() {
            let slope = -gauge.norm_squared() / s;
            return Ok(diverged(x, DivergenceKind::GaugeComponent, -gauge, slope, 0));
        }
        let xn = (x - gauge) / s;
        let na = g.num_edges();
        let prog = Program {
            theta0: DVector::from_element(na, self.delta),
            lin: self.e0.transpose() * &xn,
            m: self.e0.clone(),
            base: self.delta * xn.sum(),
        };
        match self.minimize(&prog)? {
            Outcome::Diverged { ray_t, slope, iterations } => {
                Ok(diverged(x, DivergenceKind::Unbounded, &self.e0 * ray_t, slope * s, iterations))
            }
            Outcome::Converged { t, sd, iterations, grad } => {
                let theta = prog.theta(&t);
                let value = prog.base + prog.lin.dot(&t);
                let theta_star = theta.add_scalar(sd.log_lambda());
                let psi = (value + sd.log_lambda()) * s;
                let stationarity = (&xn - drift(g, &sd)).amax();
                Ok(GrowthProfile {
                    direction: x.clone(),
                    psi: Psi::Finite(psi),
                    theta_star: Some(theta_star),
                    label_weights: None,
                    attaining: None,
                    converged: true,
                    boundary: t.norm() > self.options.boundary_radius,
                    iterations,
                    gradient_norm: grad,
                    stationarity: Some(stationarity),
                    certificate: None,
                })
            }
        }
    }

    fn objective(&self, prog: &Program<T>, t: &DVector<T>) -> Option<T> {
        let v = log_perron_value(self.graph, &prog.theta(t)).ok()?;
        let f = prog.base + prog.lin.dot(t) + v;
        f.is_finite_val().then_some(f)
    }

    fn recession_slope(&self, prog: &Program<T>, dir: &DVector<T>) -> T {
        let norm = dir.norm();
        if norm == T::zero() {
            return T::zero();
        }
        let d = dir / norm;
        prog.lin.dot(&d) - min_cycle_mean(self.graph, &(&prog.m * &d))
    }

    fn minimize(&self, prog: &Program<T>) -> Result<Outcome<T>> {
        let opts = &self.options;
        let dim = prog.m.ncols();
        let mut t = DVector::<T>::zeros(dim);
        let mut value = self.objective(prog, &t).ok_or(Error::Overflow { edge: 0, theta: 0.0 })?;
        let mut grad_norm = T::zero();
        for it in 0..opts.max_iter {
            let sd = self.spectral(&prog.theta(&t))?;
            let x_theta = drift(self.graph, &sd);
            let grad = &prog.lin - prog.m.transpose() * &x_theta;
            grad_norm = grad.amax();
            if grad_norm <= opts.tol {
                return Ok(Outcome::Converged { t, sd, iterations: it, grad: grad_norm });
            }
            let hess = {
                let h = hessian_log_lambda(self.graph, &sd)?;
                prog.m.transpose() * &h.matrix * &prog.m
            };
            let mut step = match hess.clone().cholesky() {
                Some(ch) => -ch.solve(&grad),
                None => -grad.clone(),
            };
            if step.dot(&grad) >= T::zero() {
                step = -grad.clone();
            }
            let sn = step.norm();
            if sn > opts.step_cap {
                step *= opts.step_cap / sn;
            }
            let slope0 = step.dot(&grad);
            let mut alpha = T::one();
            let mut accepted = None;
            // Below roundoff of the objective the line search cannot discriminate;
            // the iterate is then deep in the quadratic region and the full step is taken.
            let noise = T::default_epsilon() * T::lit(100.0) * (T::one() + value.abs());
            if -slope0 <= noise {
                let trial = &t + &step;
                if let Some(v) = self.objective(prog, &trial) {
                    accepted = Some((trial, v));
                }
            }
            for _ in 0..60 {
                if accepted.is_some() {
                    break;
                }
                let trial = &t + &step * alpha;
                if let Some(v) = self.objective(prog, &trial) {
                    if v <= value + T::lit(1e-4) * alpha * slope0 {
                        accepted = Some((trial, v));
                        break;
                    }
                }
                alpha *= T::lit(0.5);
            }
            let Some((next, v)) = accepted else {
                // No decrease representable: accept the point if the gradient is
                // at roundoff level relative to the objective scale.
                if grad_norm <= opts.tol * T::lit(1e3) {
                    return Ok(Outcome::Converged { t, sd, iterations: it, grad: grad_norm });
                }
                return Err(Error::SolverStalled { iterations: it, gradient_norm: grad_norm.to_f64_lossy() });
            };
            t = next;
            value = v;
            if t.norm() > opts.divergence_radius {
                for dir in [t.clone(), step.clone()] {
                    let slope = self.recession_slope(prog, &dir);
                    if slope < -T::lit(1e-9) {
                        return Ok(Outcome::Diverged { ray_t: dir.normalize(), slope, iterations: it + 1 });
                    }
                }
            }
        }
        Err(Error::SolverStalled { iterations: opts.max_iter, gradient_norm: grad_norm.to_f64_lossy() })
    }
}

fn diverged<T: Real>(x: &DVector<T>, kind: DivergenceKind, ray: DVector<T>, slope: T, iterations: usize) -> GrowthProfile<T> {
    GrowthProfile {
        direction: x.clone(),
        psi: Psi::NegInfinity,
        theta_star: None,
        label_weights: None,
        attaining: None,
        converged: true,
        boundary: false,
        iterations,
        gradient_norm: T::zero(),
        stationarity: None,
        certificate: Some(DivergenceCertificate { kind, ray, slope }),
    }
}

/// `|A| x |B|` matrix of `pi^*`.
pub fn pullback_matrix<T: Real>(lg: &LabelledGraph) -> DMatrix<T> {
    let mut m = DMatrix::zeros(lg.base().num_edges(), lg.num_labels());
    for a in 0..lg.base().num_edges() {
        m[(a, lg.label(a))] = T::one();
    }
    m
}

/// Solver for `psi_A(y) = sup { psi_G(x) : pi(x) = y }`.
#[derive(Debug, Clone)]
pub struct SoficGrowth<'g, T: Real> {
    labelled: &'g LabelledGraph,
    growth: Growth<'g, T>,
    pullback: DMatrix<T>,
    /// Orthonormal basis of label weights whose pullback is a gauge vector, and the
    /// coefficient `c` of `1` in that pullback.
    gauge: Vec<(DVector<T>, T)>,
    /// Orthonormal basis of the complement of the gauge label weights.
    search: DMatrix<T>,
}

impl<'g, T: Real> SoficGrowth<'g, T> {
    pub fn new(labelled: &'g LabelledGraph) -> Result<Self> {
        let g = labelled.base();
        let growth = Growth::new(g)?;
        let pullback = pullback_matrix::<T>(labelled);
        let rows = pullback.transpose() * &growth.e0;
        let kernel = orthogonal_complement(&rows);
        let search = orthogonal_complement(&kernel);
        // Pinned gauge generators: drop nabla 1_{q_0}, which is minus the sum of the others.
        let gens = gauge_generators::<T>(g);
        let pinned = gens.columns(0, 1).into_owned();
        let pinned = if g.num_vertices() > 1 {
            let mut m = DMatrix::zeros(g.num_edges(), g.num_vertices());
            m.set_column(0, &pinned.column(0));
            m.columns_mut(1, g.num_vertices() - 1).copy_from(&gens.columns(2, g.num_vertices() - 1));
            m
        } else {
            pinned
        };
        let mut gauge = Vec::with_capacity(kernel.ncols());
        for k in kernel.column_iter() {
            let k = k.into_owned();
            let z = lstsq(&pinned, &(&pullback * &k))?;
            gauge.push((k, z[0]));
        }
        Ok(Self { labelled, growth, pullback, gauge, search })
    }

    pub fn with_options(mut self, options: SolverOptions<T>) -> Self {
        self.growth.options = options;
        self
    }

    pub fn growth(&self) -> &Growth<'g, T> {
        &self.growth
    }

    pub fn labelled(&self) -> &LabelledGraph {
        self.labelled
    }

    pub fn pullback(&self) -> &DMatrix<T> {
        &self.pullback
    }

    /// `pi` applied to an edge vector.
    pub fn project(&self, x: &DVector<T>) -> DVector<T> {
        self.pullback.transpose() * x
    }

    pub fn psi(&self, y: &DVector<T>) -> Result<GrowthProfile<T>> {
        let nb = self.labelled.num_labels();
        if y.len() != nb {
            return Err(Error::DimensionMismatch { expected: nb, got: y.len() });
        }
        if y.iter().all(|v| *v == T::zero()) {
            return Err(Error::ZeroDirection);
        }
        if let Some(b) = y.iter().position(|v| *v < T::zero()) {
            let mut ray = DVector::zeros(nb);
            ray[b] = T::one();
            return Ok(diverged(y, DivergenceKind::NegativeCoordinate(b), ray, y[b], 0));
        }
        let s = y.sum();
        let yn = y / s;
        for (k, c) in &self.gauge {
            let rate = k.dot(&yn) - *c;
            if rate.abs() > self.growth.options.gauge_tol {
                let ray = if rate > T::zero() { -k } else { k.clone() };
                return Ok(diverged(y, DivergenceKind::GaugeComponent, ray, -rate.abs() * s, 0));
            }
        }
        let delta = self.growth.delta;
        let prog = Program {
            theta0: DVector::from_element(self.labelled.base().num_edges(), delta),
            m: &self.pullback * &self.search,
            lin: self.search.transpose() * &yn,
            base: delta * yn.sum(),
        };
        match self.growth.minimize(&prog)? {
            Outcome::Diverged { ray_t, slope, iterations } => {
                Ok(diverged(y, DivergenceKind::Unbounded, &self.search * ray_t, slope * s, iterations))
            }
            Outcome::Converged { t, sd, iterations, grad } => {
                let ll = sd.log_lambda();
                let value = prog.base + prog.lin.dot(&t);
                let weights = (&self.search * &t).add_scalar(delta + ll);
                let theta_star = &self.pullback * &weights;
                let x_theta = drift(self.labelled.base(), &sd);
                let stationarity = (&yn - self.project(&x_theta)).amax();
                Ok(GrowthProfile {
                    direction: y.clone(),
                    psi: Psi::Finite((value + ll) * s),
                    theta_star: Some(theta_star),
                    label_weights: Some(weights),
                    attaining: Some(x_theta * s),
                    converged: true,
                    boundary: t.norm() > self.growth.options.boundary_radius,
                    iterations,
                    gradient_norm: grad,
                    stationarity: Some(stationarity),
                    certificate: None,
                })
            }
        }
    }
}
