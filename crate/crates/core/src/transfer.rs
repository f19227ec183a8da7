//! Transfer operators `L_theta` and their Perron data.
//!
//! `(L_theta f)(q) = sum_{source(a)=q} exp(-theta(a)) f(goal(a))`.
//!
//! Spectra are computed on the gauge-shifted operator `L_{theta - m 1}` with
//! `m = min theta`, whose entries lie in `(0, 1]`; the Perron value is then
//! rescaled by `exp(-m)`. Eigenvectors are unaffected by the shift.

use nalgebra::{Complex, DMatrix, DVector, Schur};

use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, PeriodData, VertexId};
use crate::linalg::null_vector;
use crate::scalar::Real;

/// Iteration budget shared by the Schur decomposition and power iteration.
pub const ITERATION_BUDGET: usize = 100_000;

/// Above this many vertices the dense path is replaced by power iteration.
pub const DENSE_LIMIT: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix<S: nalgebra::Scalar> {
    pub entries: DMatrix<S>,
    pub theta: DVector<S>,
}

fn check_len<T>(g: &DirectedGraph, v: &DVector<T>) -> Result<()> {
    if v.len() != g.num_edges() {
        return Err(Error::DimensionMismatch { expected: g.num_edges(), got: v.len() });
    }
    Ok(())
}

fn edge_weight<T: Real>(a: usize, theta: T) -> Result<T> {
    let w = (-theta).exp();
    if !w.is_finite_val() || w <= T::zero() {
        return Err(Error::Overflow { edge: a, theta: theta.to_f64_lossy() });
    }
    Ok(w)
}

/// Matrix of `L_theta` in the vertex basis.
pub fn build_transfer<T: Real>(g: &DirectedGraph, theta: &DVector<T>) -> Result<TransferMatrix<T>> {
    check_len(g, theta)?;
    let n = g.num_vertices();
    let mut m = DMatrix::zeros(n, n);
    for a in 0..g.num_edges() {
        m[(g.source(a), g.goal(a))] += edge_weight(a, theta[a])?;
    }
    Ok(TransferMatrix { entries: m, theta: theta.clone() })
}

/// `L_{theta_re + i theta_im}`.
pub fn build_transfer_complex<T: Real>(
    g: &DirectedGraph,
    theta_re: &DVector<T>,
    theta_im: &DVector<T>,
) -> Result<TransferMatrix<Complex<T>>> {
    check_len(g, theta_re)?;
    check_len(g, theta_im)?;
    let n = g.num_vertices();
    let mut m = DMatrix::from_element(n, n, Complex::new(T::zero(), T::zero()));
    for a in 0..g.num_edges() {
        let modulus = edge_weight(a, theta_re[a])?;
        let phase = -theta_im[a];
        m[(g.source(a), g.goal(a))] += Complex::new(modulus * phase.cos(), modulus * phase.sin());
    }
    let theta = theta_re.zip_map(theta_im, |re, im| Complex::new(re, im));
    Ok(TransferMatrix { entries: m, theta })
}

fn min_entry<T: Real>(v: &DVector<T>) -> T {
    v.iter().copied().fold(T::max_value().expect("real type has a maximum"), |a, b| a.min(b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EigenMethod {
    /// Dense Schur decomposition up to [`DENSE_LIMIT`] vertices, power iteration beyond.
    #[default]
    Auto,
    Dense,
    PowerIteration,
}

/// Perron data of `L_theta` for real `theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData<T: Real> {
    pub theta: DVector<T>,
    /// Spectral radius `lambda(theta)`.
    pub lambda: T,
    /// Right eigenvector, positive, with `<phi, f> = 1`.
    pub f: DVector<T>,
    /// Left eigenvector, positive, with `<phi, 1> = 1`.
    pub phi: DVector<T>,
    /// `|mu_2| / lambda` over the non-peripheral spectrum; `None` when not computed.
    pub gap: Option<T>,
    pub period: PeriodData,
}

impl<T: Real> SpectralData<T> {
    pub fn log_lambda(&self) -> T {
        self.lambda.ln()
    }

    /// Leading term `p lambda^n <phi, f0 1_{Q_n^q}> f(q)` of `(L_theta^n f0)(q)`.
    pub fn power_asymptotics(&self, n: usize, q: VertexId, f0: &DVector<T>) -> T {
        let class = self.period.class_indicator(q, n);
        let inner = (0..self.phi.len())
            .filter(|&v| class[v])
            .fold(T::zero(), |acc, v| acc + self.phi[v] * f0[v]);
        T::lit(self.period.period as f64) * self.lambda.powi(n as i32) * inner * self.f[q]
    }

    /// `max(||L f - lambda f||_inf, ||L^T phi - lambda phi||_inf)` relative to `lambda`.
    pub fn residual(&self, g: &DirectedGraph) -> Result<T> {
        let m = build_transfer(g, &self.theta)?.entries;
        let rf = (&m * &self.f - &self.f * self.lambda).amax();
        let rp = (m.transpose() * &self.phi - &self.phi * self.lambda).amax();
        Ok(rf.max(rp) / self.lambda)
    }
}

/// Perron data with the default method.
pub fn perron_data<T: Real>(g: &DirectedGraph, theta: &DVector<T>, tol: T) -> Result<SpectralData<T>> {
    let period = g.compute_period()?;
    perron_data_with(g, &period, theta, tol, EigenMethod::Auto)
}

pub fn perron_data_with<T: Real>(
    g: &DirectedGraph,
    period: &PeriodData,
    theta: &DVector<T>,
    tol: T,
    method: EigenMethod,
) -> Result<SpectralData<T>> {
    check_len(g, theta)?;
    match method {
        EigenMethod::Dense => perron_attempt(g, period, theta, tol, true),
        EigenMethod::PowerIteration => perron_attempt(g, period, theta, tol, false),
        EigenMethod::Auto if g.num_vertices() <= DENSE_LIMIT => {
            perron_attempt(g, period, theta, tol, true).or_else(|_| perron_attempt(g, period, theta, tol, false))
        }
        EigenMethod::Auto => perron_attempt(g, period, theta, tol, false),
    }
}

fn perron_attempt<T: Real>(
    g: &DirectedGraph,
    period: &PeriodData,
    theta: &DVector<T>,
    tol: T,
    dense: bool,
) -> Result<SpectralData<T>> {
    let shift = min_entry(theta);
    let shifted = theta.map(|t| t - shift);
    let m = build_transfer(g, &shifted)?.entries;
    let (lambda_shifted, f, phi, gap) = if dense {
        dense_perron(&m, period.period, tol)?
    } else {
        let (l, f, phi) = power_perron(&m, period, tol)?;
        (l, f, phi, None)
    };
    let lambda = lambda_shifted * (-shift).exp();
    if !lambda.is_finite_val() || lambda <= T::zero() {
        return Err(Error::Overflow { edge: 0, theta: shift.to_f64_lossy() });
    }
    let (f, phi) = normalize_pair(f, phi)?;
    let rf = (&m * &f - &f * lambda_shifted).amax();
    let rp = (m.transpose() * &phi - &phi * lambda_shifted).amax();
    let residual = rf.max(rp) / lambda_shifted;
    let accept = tol.max(T::default_epsilon() * T::lit(1e3));
    if !(residual <= accept * (T::one() + f.amax())) {
        return Err(Error::NonConvergence { iterations: ITERATION_BUDGET, residual: residual.to_f64_lossy() });
    }
    Ok(SpectralData { theta: theta.clone(), lambda, f, phi, gap, period: period.clone() })
}

/// `log lambda(theta)` without eigenvectors.
pub fn log_perron_value<T: Real>(g: &DirectedGraph, theta: &DVector<T>) -> Result<T> {
    check_len(g, theta)?;
    if g.is_cyclic() {
        // A single cycle: L^p = exp(-sum theta) I.
        return Ok(-theta.sum() / T::lit(g.num_edges() as f64));
    }
    let shift = min_entry(theta);
    let m = build_transfer(g, &theta.map(|t| t - shift))?.entries;
    Ok(spectral_radius_real(&m)?.ln() - shift)
}

fn spectral_radius_real<T: Real>(m: &DMatrix<T>) -> Result<T> {
    Ok(eigenvalues(m)?.iter().map(|z| z.re.hypot(z.im)).fold(T::zero(), |a, b| a.max(b)))
}

/// Shifts tried when the QR iteration stalls, as happens on permutation matrices.
const RETRY_SHIFTS: [f64; 3] = [0.0, 1.0, 0.37];

/// All eigenvalues of a real matrix.
fn eigenvalues<T: Real>(m: &DMatrix<T>) -> Result<Vec<Complex<T>>> {
    let n = m.nrows();
    for shift in RETRY_SHIFTS {
        let c = T::lit(shift);
        let a = m + DMatrix::<T>::identity(n, n) * c;
        if let Some(schur) = Schur::try_new(a, T::default_epsilon(), ITERATION_BUDGET) {
            return Ok(schur.complex_eigenvalues().iter().map(|z| Complex::new(z.re - c, z.im)).collect());
        }
    }
    Err(Error::NonConvergence { iterations: ITERATION_BUDGET, residual: f64::NAN })
}

fn normalize_pair<T: Real>(f: DVector<T>, phi: DVector<T>) -> Result<(DVector<T>, DVector<T>)> {
    let fix_sign = |v: DVector<T>| if v.sum() < T::zero() { -v } else { v };
    let f = fix_sign(f).map(|x| x.abs());
    let phi = fix_sign(phi).map(|x| x.abs());
    let s = phi.sum();
    if !(s > T::zero()) {
        return Err(Error::LinearSolve("left Perron vector vanished".into()));
    }
    let phi = phi / s;
    let pf = phi.dot(&f);
    if !(pf > T::zero()) {
        return Err(Error::LinearSolve("Perron vectors are orthogonal".into()));
    }
    Ok((f / pf, phi))
}

/// Dense path: Schur spectrum, then null vectors of `L - lambda` and its transpose.
fn dense_perron<T: Real>(m: &DMatrix<T>, period: usize, _tol: T) -> Result<(T, DVector<T>, DVector<T>, Option<T>)> {
    let n = m.nrows();
    let mut moduli: Vec<T> = eigenvalues(m)?.iter().map(|z| z.re.hypot(z.im)).collect();
    moduli.sort_by(|a, b| b.partial_cmp(a).expect("finite moduli"));
    let mut lambda = moduli[0];
    let gap = Some(if n > period { moduli[period] / lambda } else { T::zero() });

    let ident = DMatrix::<T>::identity(n, n);
    let f = null_vector(&(m - &ident * lambda))?;
    let phi = null_vector(&(m.transpose() - &ident * lambda))?;
    let (f, phi) = normalize_pair(f, phi)?;
    // Rayleigh refinement; <phi, f> = 1 after normalization.
    lambda = phi.dot(&(m * &f));
    Ok((lambda, f, phi, gap))
}

/// Power iteration on `L^p` restricted to phase class 0, where the Perron
/// root is simple and strictly dominant, then propagation to the other classes.
fn power_perron<T: Real>(m: &DMatrix<T>, period: &PeriodData, tol: T) -> Result<(T, DVector<T>, DVector<T>)> {
    let p = period.period;
    let n = m.nrows();
    let classes: Vec<Vec<usize>> = (0..p).map(|j| (0..n).filter(|&q| period.phase[q] == j).collect()).collect();
    let mut mp = DMatrix::<T>::identity(n, n);
    for _ in 0..p {
        mp = &mp * m;
    }
    let c0 = &classes[0];
    let block = DMatrix::from_fn(c0.len(), c0.len(), |i, j| mp[(c0[i], c0[j])]);
    let (rho, v) = power_iterate(&block, tol)?;
    let (_, w) = power_iterate(&block.transpose(), tol)?;
    let lambda = rho.powf(T::one() / T::lit(p as f64));

    let mut f = DVector::zeros(n);
    let mut phi = DVector::zeros(n);
    for (i, &q) in c0.iter().enumerate() {
        f[q] = v[i];
        phi[q] = w[i];
    }
    for j in (1..p).rev() {
        let mf = m * &f;
        for &q in &classes[j] {
            f[q] = mf[q] / lambda;
        }
    }
    for j in 1..p {
        let mp_phi = m.transpose() * &phi;
        for &q in &classes[j] {
            phi[q] = mp_phi[q] / lambda;
        }
    }
    Ok((lambda, f, phi))
}

fn power_iterate<T: Real>(a: &DMatrix<T>, tol: T) -> Result<(T, DVector<T>)> {
    let n = a.nrows();
    let mut v = DVector::from_element(n, T::one() / T::lit(n as f64));
    let stop = (tol * T::lit(1e-2)).max(T::default_epsilon() * T::lit(64.0));
    // Repeated squaring first, so small spectral gaps cost log iterations.
    let mut b = a.clone();
    for _ in 0..SQUARINGS {
        b = &b * &b;
        let m = b.amax();
        if !(m > T::zero()) || !m.is_finite_val() {
            break;
        }
        b /= m;
        let w = &b * &v;
        let s = w.sum();
        if !(s > T::zero()) {
            break;
        }
        let w = w / s;
        let settled = (&w - &v).amax() <= stop * w.amax();
        v = w;
        if settled {
            break;
        }
    }
    let mut last_delta = T::zero();
    let mut best = T::max_value().unwrap_or_else(T::one);
    let mut stalled = 0usize;
    for _ in 0..ITERATION_BUDGET {
        let w = a * &v;
        let s = w.sum();
        if !(s > T::zero()) {
            return Err(Error::LinearSolve("power iteration collapsed to zero".into()));
        }
        let w = w / s;
        last_delta = (&w - &v).amax();
        v = w;
        if last_delta < best * T::lit(0.5) {
            best = last_delta;
            stalled = 0;
        } else {
            stalled += 1;
        }
        // Rounding noise can keep the update above `stop` forever.
        if last_delta <= stop * v.amax() || (stalled > STALL_LIMIT && last_delta <= tol * v.amax()) {
            let rho = (a * &v).sum() / v.sum();
            return Ok((rho, v));
        }
    }
    Err(Error::NonConvergence { iterations: ITERATION_BUDGET, residual: last_delta.to_f64_lossy() })
}

const STALL_LIMIT: usize = 5000;
const SQUARINGS: usize = 40;

/// Spectral radius of `L_{theta_re + i theta_im}`.
pub fn spectral_radius_complex<T: Real>(g: &DirectedGraph, theta_re: &DVector<T>, theta_im: &DVector<T>) -> Result<T> {
    check_len(g, theta_re)?;
    let shift = min_entry(theta_re);
    let m = build_transfer_complex(g, &theta_re.map(|t| t - shift), theta_im)?.entries;
    let n = m.nrows();
    let mut rho = None;
    for shift in RETRY_SHIFTS {
        let c = Complex::new(T::lit(shift), T::zero());
        let a = &m + DMatrix::<Complex<T>>::identity(n, n) * c;
        if let Some(schur) = Schur::try_new(a, T::default_epsilon(), ITERATION_BUDGET) {
            let (_, t) = schur.unpack();
            rho = Some(t.diagonal().iter().map(|z| (z - c).re.hypot((z - c).im)).fold(T::zero(), |a, b| a.max(b)));
            break;
        }
    }
    let rho = rho.ok_or(Error::NonConvergence { iterations: ITERATION_BUDGET, residual: f64::NAN })?;
    Ok(rho * (-shift).exp())
}

/// Spectral radius of `L_{theta + 2 pi i xi}`.
pub fn spectral_radius_twisted<T: Real>(g: &DirectedGraph, theta: &DVector<T>, xi: &DVector<T>) -> Result<T> {
    spectral_radius_complex(g, theta, &(xi * T::two_pi()))
}

/// Exact `(L_theta^n f0)` by repeated multiplication.
pub fn apply_power<T: Real>(g: &DirectedGraph, theta: &DVector<T>, n: usize, f0: &DVector<T>) -> Result<DVector<T>> {
    let m = build_transfer(g, theta)?.entries;
    let mut v = f0.clone();
    for _ in 0..n {
        v = &m * v;
    }
    Ok(v)
}
