//! Seeded property sweeps over one graph: spectral residuals, derivative
//! checks against finite differences, gauge invariance, duality, exact-count
//! cross-checks and normalizer properties.

use std::fmt::Write as _;

use nalgebra::DVector;
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{Map, Value};

use crate::calculus::{drift, grad_lambda, hessian_log_lambda, nabla};
use crate::counting::{count_distribution, edge_coords, enumerate_distribution, walk_counts, Budget};
use crate::error::Result;
use crate::graph::{for_each_path, Graph};
use crate::growth::{Growth, Psi};
use crate::lattice::{orthogonal_to_nabla, LatticeFrame};
use crate::report::{real, real_text};
use crate::transfer::{log_perron_value, SpectralData};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Random points per suite.
    pub samples: usize,
    pub tol: f64,
    /// Longest word length for the exact-count suites.
    pub max_length: usize,
    /// Relative error injected into every Perron value the sweeps see; zero in normal use.
    pub lambda_fault: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { seed: 0, samples: 25, tol: 1e-6, max_length: 8, lambda_fault: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub detail: String,
    /// What `vector` is: a weight `theta`, a direction `x`, ...
    pub what: &'static str,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: usize,
    pub failed: usize,
    pub first_failure: Option<Failure>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub seed: u64,
    pub suites: Vec<SuiteResult>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.suites.iter().all(|s| s.failed == 0)
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("seed".into(), Value::from(self.seed));
        m.insert("ok".into(), Value::Bool(self.ok()));
        let suites = self
            .suites
            .iter()
            .map(|s| {
                let mut sm = Map::new();
                sm.insert("name".into(), Value::from(s.name));
                sm.insert("passed".into(), Value::from(s.passed));
                sm.insert("failed".into(), Value::from(s.failed));
                let fail = s.first_failure.as_ref().map_or(Value::Null, |f| {
                    let mut fm = Map::new();
                    fm.insert("detail".into(), Value::from(f.detail.clone()));
                    fm.insert("what".into(), Value::from(f.what));
                    fm.insert("vector".into(), Value::Array(f.vector.iter().map(|v| real(*v)).collect()));
                    Value::Object(fm)
                });
                sm.insert("reproducer".into(), fail);
                Value::Object(sm)
            })
            .collect();
        m.insert("suites".into(), Value::Array(suites));
        Value::Object(m)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for suite in &self.suites {
            let status = if suite.failed == 0 { "pass" } else { "FAIL" };
            let _ = writeln!(s, "{status}  {:<14} {:>4} passed {:>4} failed", suite.name, suite.passed, suite.failed);
            if let Some(f) = &suite.first_failure {
                let v: Vec<String> = f.vector.iter().map(|x| real_text(*x)).collect();
                let _ = writeln!(s, "      {}", f.detail);
                let _ = writeln!(s, "      {} = [{}]", f.what, v.join(", "));
            }
        }
        let total: usize = self.suites.iter().map(|x| x.passed + x.failed).sum();
        let failed: usize = self.suites.iter().map(|x| x.failed).sum();
        let _ = writeln!(s, "seed {}: {} checks, {} failed", self.seed, total, failed);
        s
    }
}

struct Suite {
    result: SuiteResult,
}

impl Suite {
    fn new(name: &'static str) -> Self {
        Self { result: SuiteResult { name, passed: 0, failed: 0, first_failure: None } }
    }

    fn check(&mut self, ok: bool, what: &'static str, vector: &[f64], detail: impl FnOnce() -> String) {
        if ok {
            self.result.passed += 1;
        } else {
            self.result.failed += 1;
            if self.result.first_failure.is_none() {
                self.result.first_failure = Some(Failure { detail: detail(), what, vector: vector.to_vec() });
            }
        }
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

struct Sweeper<'g> {
    graph: &'g Graph,
    growth: Growth<'g, f64>,
    rng: ChaCha8Rng,
    opts: VerifyOptions,
}

impl<'g> Sweeper<'g> {
    fn spectral(&self, theta: &DVector<f64>) -> Result<SpectralData<f64>> {
        let mut sd = self.growth.spectral(theta)?;
        sd.lambda *= 1.0 + self.opts.lambda_fault;
        Ok(sd)
    }

    fn random_theta(&mut self) -> DVector<f64> {
        let na = self.graph.base().num_edges();
        DVector::from_fn(na, |_, _| self.rng.random_range(-2.0..2.0))
    }

    fn perron(&mut self) -> Result<SuiteResult> {
        let mut suite = Suite::new("perron");
        let g = self.graph.base();
        for _ in 0..self.opts.samples {
            let theta = self.random_theta();
            let sd = self.spectral(&theta)?;
            let res = sd.residual(g)?;
            suite.check(res <= self.opts.tol * 1e-2, "theta", theta.as_slice(), || {
                format!("eigen-residual {} at lambda {}", real_text(res), real_text(sd.lambda))
            });
            let norm = (sd.phi.sum() - 1.0).abs().max((sd.phi.dot(&sd.f) - 1.0).abs());
            suite.check(norm <= 1e-10, "theta", theta.as_slice(), || format!("normalization off by {}", real_text(norm)));
            let lv = log_perron_value(g, &theta)?;
            let e = (lv - sd.log_lambda()).abs();
            suite.check(e <= self.opts.tol * 1e-2, "theta", theta.as_slice(), || {
                format!("log lambda {} against eigenvalue-only value {}", real_text(sd.log_lambda()), real_text(lv))
            });
        }
        Ok(suite.result)
    }

    fn gradient(&mut self) -> Result<SuiteResult> {
        let mut suite = Suite::new("gradient");
        let g = self.graph.base();
        let h = 1e-5;
        for _ in 0..self.opts.samples {
            let theta = self.random_theta();
            let sd = self.spectral(&theta)?;
            let grad = grad_lambda(g, &sd).grad_lambda;
            let mut worst = 0f64;
            for a in 0..g.num_edges() {
                let mut tp = theta.clone();
                let mut tm = theta.clone();
                tp[a] += h;
                tm[a] -= h;
                let fd = (log_perron_value(g, &tp)?.exp() - log_perron_value(g, &tm)?.exp()) / (2.0 * h);
                worst = worst.max((grad[a] - fd).abs() / sd.lambda.abs().max(1e-300));
            }
            suite.check(worst <= self.opts.tol, "theta", theta.as_slice(), || {
                format!("gradient differs from central differences by {} relative", real_text(worst))
            });
        }
        Ok(suite.result)
    }

    fn hessian(&mut self) -> Result<SuiteResult> {
        let mut suite = Suite::new("hessian");
        let g = self.graph.base();
        let h = 1e-5;
        for _ in 0..self.opts.samples.min(10) {
            let theta = self.random_theta();
            let sd = self.spectral(&theta)?;
            let form = hessian_log_lambda(g, &sd)?;
            let xi = self.random_theta();
            let eta = self.random_theta();
            let dp = drift(g, &self.spectral(&(&theta + &eta * h))?);
            let dm = drift(g, &self.spectral(&(&theta - &eta * h))?);
            let fd = -(dp - dm).dot(&xi) / (2.0 * h);
            let an = form.eval(&xi, &eta);
            let e = (an - fd).abs() / an.abs().max(1.0);
            suite.check(e <= 10.0 * self.opts.tol, "theta", theta.as_slice(), || {
                format!("Hessian {} against finite differences {}", real_text(an), real_text(fd))
            });
            let one = DVector::from_element(g.num_edges(), 1.0);
            let k1 = form.eval(&one, &one).abs();
            let kn = (0..g.num_vertices())
                .map(|q| {
                    let e = DVector::from_fn(g.num_vertices(), |i, _| if i == q { 1.0 } else { 0.0 });
                    let v = nabla(g, &e);
                    form.eval(&v, &v).abs()
                })
                .fold(0f64, f64::max);
            suite.check(k1.max(kn) <= 1e-9, "theta", theta.as_slice(), || {
                format!("Hessian is {} on a gauge direction", real_text(k1.max(kn)))
            });
            let gram = form.e0_gram.clone();
            let min_eig = if gram.nrows() == 0 {
                f64::INFINITY
            } else {
                gram.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
            };
            suite.check(min_eig > 0.0, "theta", theta.as_slice(), || {
                format!("Hessian on E_0 has eigenvalue {}", real_text(min_eig))
            });
        }
        Ok(suite.result)
    }

    fn gauge(&mut self) -> Result<SuiteResult> {
        let mut suite = Suite::new("gauge");
        let g = self.graph.base();
        for _ in 0..self.opts.samples {
            let theta = self.random_theta();
            let xi = DVector::from_fn(g.num_vertices(), |_, _| self.rng.random_range(-1.0..1.0));
            let c: f64 = self.rng.random_range(-1.0..1.0);
            let moved = &theta + nabla(g, &xi) + DVector::from_element(g.num_edges(), c);
            let a = self.spectral(&theta)?.log_lambda();
            let b = self.spectral(&moved)?.log_lambda();
            let e = (a - c - b).abs();
            suite.check(e <= self.opts.tol * 1e-2, "theta", theta.as_slice(), || {
                format!("log lambda moved by {} under a gauge shift", real_text(e))
            });
        }
        Ok(suite.result)
    }

    fn duality(&mut self) -> Result<SuiteResult> {
        let mut suite = Suite::new("duality");
        let g = self.graph.base();
        if g.is_cyclic() {
            return Ok(suite.result);
        }
        for _ in 0..self.opts.samples.min(10) {
            let theta = self.random_theta();
            let sd = self.spectral(&theta)?;
            let x = drift(g, &sd);
            let expected = (&theta).add_scalar(sd.log_lambda()).dot(&x);
            let got = self.growth.psi(&x)?;
            let ok = matches!(got.psi, Psi::Finite(v) if rel_err(v, expected) <= self.opts.tol || (v - expected).abs() <= self.opts.tol);
            suite.check(ok, "x", x.as_slice(), || {
                format!("psi {} but the supporting weight gives {}", real_text(got.psi.to_f64()), real_text(expected))
            });
        }
        Ok(suite.result)
    }

    fn entropy(&mut self) -> Result<SuiteResult> {
        let mut suite = Suite::new("entropy");
        let g = self.graph.base();
        if g.num_vertices() != 1 {
            return Ok(suite.result);
        }
        for _ in 0..self.opts.samples {
            let x = DVector::from_fn(g.num_edges(), |_, _| self.rng.random_range(0.05..3.0));
            let s = x.sum();
            let closed: f64 = x.iter().map(|v: &f64| -v * (v / s).ln()).sum();
            let got = self.growth.psi(&x)?.psi.to_f64();
            suite.check(rel_err(got, closed) <= self.opts.tol, "x", x.as_slice(), || {
                format!("psi {} against the entropy formula {}", real_text(got), real_text(closed))
            });
        }
        Ok(suite.result)
    }

    fn oracle(&mut self) -> Result<SuiteResult> {
        let mut suite = Suite::new("oracle");
        let g = self.graph.base();
        let budget = Budget { max_length: self.opts.max_length, parallel: false, ..Budget::default() };
        let (coords, nc) = match self.graph.labelled() {
            Some(lg) => (lg.labelling().to_vec(), lg.num_labels()),
            None => (edge_coords(g), g.num_edges()),
        };
        for n in 0..=self.opts.max_length {
            let q = self.rng.random_range(0..g.num_vertices());
            let walks = walk_counts(g, n, q);
            for qp in 0..g.num_vertices() {
                let dp = count_distribution(g, &coords, nc, n, q, qp, &budget)?;
                let en = enumerate_distribution(g, &coords, nc, n, q, qp);
                let total: BigUint = dp.values().sum();
                let ok = dp == en && total == walks[qp];
                suite.check(ok, "n,q,q'", &[n as f64, q as f64, qp as f64], || {
                    format!("dynamic program and enumeration disagree ({} against {} words)", total, walks[qp])
                });
            }
        }
        Ok(suite.result)
    }

    fn normalizer(&mut self) -> Result<SuiteResult> {
        let mut suite = Suite::new("normalizer");
        let g = self.graph.base();
        let frame = LatticeFrame::build(g)?;
        suite.check(frame.normalizer.check_straightening(g), "edges", &[], || "straightening fails on some edge".into());
        suite.check(frame.normalizer.check_phase_constancy(&frame.period), "edges", &[], || {
            "normalized totals are not constant on phase classes".into()
        });
        let n = self.opts.max_length;
        for q in 0..g.num_vertices() {
            for qp in 0..g.num_vertices() {
                let mut bad: Option<Vec<i64>> = None;
                for_each_path(g, n, q, qp, |_, counts| {
                    if bad.is_some() {
                        return;
                    }
                    let p: Vec<i64> = counts.iter().map(|c| *c as i64).collect();
                    let x = frame.normalizer.normalize(&p, q, qp);
                    if frame.prescreen(g, &x, n, q, qp).is_err() || !orthogonal_to_nabla(g, &x) {
                        bad = Some(p);
                    }
                });
                let v: Vec<f64> = bad.iter().flatten().map(|x| *x as f64).collect();
                suite.check(bad.is_none(), "occurrence", &v, || {
                    format!("a word from {q} to {qp} of length {n} fails the feasibility screen")
                });
            }
        }
        Ok(suite.result)
    }
}

/// Runs every applicable suite.
pub fn verify(graph: &Graph, opts: &VerifyOptions) -> Result<VerifyReport> {
    let g = graph.base();
    g.check_connected()?;
    let mut s = Sweeper { graph, growth: Growth::new(g)?, rng: ChaCha8Rng::seed_from_u64(opts.seed), opts: *opts };
    let suites = vec![
        s.perron()?,
        s.gradient()?,
        s.hessian()?,
        s.gauge()?,
        s.duality()?,
        s.entropy()?,
        s.oracle()?,
        s.normalizer()?,
    ];
    Ok(VerifyReport { seed: opts.seed, suites })
}
