//! Deterministic JSON, CSV and text renderings of analyses and counts.
//!
//! Field order is fixed by construction and every float is written with 17
//! significant digits, so equal inputs give byte-identical output.

use std::fmt::Write as _;

use nalgebra::DVector;
use num_bigint::BigUint;
use serde_json::{Map, Number, Value};

use crate::counting::{ConvergenceReport, CountReport, Prediction};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::growth::{DivergenceKind, Growth, GrowthProfile, Psi};
use crate::lattice::{sofic_sublattice, LatticeFrame};
use crate::scalar::Real;

/// Float as a JSON number with 17 significant digits; non-finite values become strings.
pub fn real(v: f64) -> Value {
    if v.is_finite() {
        let v = if v == 0.0 { 0.0 } else { v };
        Value::Number(format!("{v:.16e}").parse::<Number>().expect("formatted float parses"))
    } else if v.is_nan() {
        Value::String("nan".into())
    } else if v > 0.0 {
        Value::String("infinity".into())
    } else {
        Value::String("-infinity".into())
    }
}

pub fn reals<T: Real>(v: &DVector<T>) -> Value {
    Value::Array(v.iter().map(|x| real(x.to_f64_lossy())).collect())
}

pub fn integers(v: &[i64]) -> Value {
    Value::Array(v.iter().map(|x| Value::from(*x)).collect())
}

/// Arbitrary-size integer as a JSON number.
pub fn integer(v: &BigUint) -> Value {
    Value::Number(v.to_string().parse::<Number>().expect("integer parses"))
}

fn opt<T>(v: Option<T>, f: impl FnOnce(T) -> Value) -> Value {
    v.map_or(Value::Null, f)
}

fn psi_value<T: Real>(p: Psi<T>) -> Value {
    real(p.to_f64())
}

/// Pretty-printed JSON followed by a newline.
pub fn to_canonical_string(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}

/// Text form of a float for CSV and text output; matches the JSON digits.
pub fn real_text(v: f64) -> String {
    match real(v) {
        Value::Number(n) => n.to_string(),
        Value::String(s) => s,
        _ => unreachable!(),
    }
}

/// Structural and spectral summary of a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub vertices: Vec<String>,
    pub edges: Vec<String>,
    pub labels: Option<Vec<String>>,
    pub period: usize,
    pub phase: Vec<usize>,
    pub cyclic: bool,
    pub delta: f64,
    pub x_g: Option<DVector<f64>>,
    pub gap: Option<f64>,
    pub r: usize,
    pub s: Option<usize>,
    pub lattice_basis: Vec<Vec<i64>>,
    pub sofic_basis: Option<Vec<Vec<i64>>>,
    pub f0: Vec<i64>,
    pub normalizer: Vec<Vec<i64>>,
}

fn columns(m: &crate::lattice::intmat::IntMatrix) -> Vec<Vec<i64>> {
    (0..m.ncols()).map(|j| m.column(j).iter().map(|v| i64::try_from(v).expect("small lattice entries")).collect()).collect()
}

pub fn analyze(graph: &Graph) -> Result<Analysis> {
    let g = graph.base();
    g.check_connected()?;
    let growth = Growth::<f64>::new(g)?;
    let frame = LatticeFrame::build(g)?;
    let x_g = match growth.x_g() {
        Ok(x) => Some(x),
        Err(Error::CyclicGraph { .. }) => None,
        Err(e) => return Err(e),
    };
    let sd = growth.spectral(&DVector::from_element(g.num_edges(), growth.delta_g()))?;
    let sofic = graph.labelled().map(|lg| sofic_sublattice(&frame, lg));
    Ok(Analysis {
        vertices: g.vertex_names().to_vec(),
        edges: g.edge_names().to_vec(),
        labels: graph.labelled().map(|lg| lg.label_names().to_vec()),
        period: frame.period.period,
        phase: frame.period.phase.clone(),
        cyclic: g.is_cyclic(),
        delta: growth.delta_g(),
        x_g,
        gap: sd.gap,
        r: frame.r(),
        s: sofic.as_ref().map(|l| l.s),
        lattice_basis: columns(&frame.lattice_e0),
        sofic_basis: sofic.as_ref().map(|l| columns(&l.basis)),
        f0: frame.f0.clone(),
        normalizer: frame.normalizer.vectors().to_vec(),
    })
}

impl Analysis {
    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("vertices".into(), Value::from(self.vertices.clone()));
        m.insert("edges".into(), Value::from(self.edges.clone()));
        m.insert("labels".into(), opt(self.labels.clone(), Value::from));
        m.insert("connected".into(), Value::Bool(true));
        m.insert("period".into(), Value::from(self.period));
        m.insert("phase".into(), Value::from(self.phase.clone()));
        m.insert("cyclic".into(), Value::Bool(self.cyclic));
        m.insert("delta".into(), real(self.delta));
        m.insert("x_g".into(), opt(self.x_g.as_ref(), reals));
        m.insert("spectral_gap".into(), opt(self.gap, real));
        m.insert("r".into(), Value::from(self.r));
        m.insert("s".into(), opt(self.s, Value::from));
        m.insert("lattice_basis".into(), Value::Array(self.lattice_basis.iter().map(|c| integers(c)).collect()));
        m.insert(
            "sofic_basis".into(),
            opt(self.sofic_basis.as_ref(), |b| Value::Array(b.iter().map(|c| integers(c)).collect())),
        );
        m.insert("f0".into(), integers(&self.f0));
        let mut table = Map::new();
        for (name, v) in self.vertices.iter().zip(&self.normalizer) {
            table.insert(name.clone(), integers(v));
        }
        m.insert("normalizer".into(), Value::Object(table));
        Value::Object(m)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "vertices     {}", self.vertices.len());
        let _ = writeln!(s, "edges        {}", self.edges.len());
        if let Some(l) = &self.labels {
            let _ = writeln!(s, "labels       {}", l.len());
        }
        let _ = writeln!(s, "connected    yes");
        let _ = writeln!(s, "period       {}", self.period);
        let _ = writeln!(s, "cyclic       {}", if self.cyclic { "yes" } else { "no" });
        let _ = writeln!(s, "delta        {}", real_text(self.delta));
        if let Some(x) = &self.x_g {
            let parts: Vec<String> = x.iter().map(|v| real_text(*v)).collect();
            let _ = writeln!(s, "x_g          [{}]", parts.join(", "));
        }
        if let Some(g) = self.gap {
            let _ = writeln!(s, "gap          {}", real_text(g));
        }
        let _ = writeln!(s, "r            {}", self.r);
        if let Some(v) = self.s {
            let _ = writeln!(s, "s            {v}");
        }
        let _ = writeln!(s, "lattice      {:?}", self.lattice_basis);
        let _ = writeln!(s, "f0           {:?}", self.f0);
        for (name, v) in self.vertices.iter().zip(&self.normalizer) {
            let _ = writeln!(s, "R({name}) {}{:?}", " ".repeat(9usize.saturating_sub(name.len())), v);
        }
        s
    }
}

fn kind_name(k: DivergenceKind) -> String {
    match k {
        DivergenceKind::NegativeCoordinate(i) => format!("negative-coordinate:{i}"),
        DivergenceKind::GaugeComponent => "gauge-component".into(),
        DivergenceKind::Unbounded => "unbounded".into(),
    }
}

pub fn psi_json<T: Real>(p: &GrowthProfile<T>) -> Value {
    let mut m = Map::new();
    m.insert("direction".into(), reals(&p.direction));
    m.insert("psi".into(), psi_value(p.psi));
    m.insert("theta_star".into(), opt(p.theta_star.as_ref(), reals));
    m.insert("label_weights".into(), opt(p.label_weights.as_ref(), reals));
    m.insert("attaining".into(), opt(p.attaining.as_ref(), reals));
    m.insert("stationarity".into(), opt(p.stationarity, |v| real(v.to_f64_lossy())));
    m.insert("gradient_norm".into(), real(p.gradient_norm.to_f64_lossy()));
    m.insert("iterations".into(), Value::from(p.iterations));
    m.insert("converged".into(), Value::Bool(p.converged));
    m.insert("boundary".into(), Value::Bool(p.boundary));
    m.insert(
        "certificate".into(),
        opt(p.certificate.as_ref(), |c| {
            let mut cm = Map::new();
            cm.insert("kind".into(), Value::String(kind_name(c.kind)));
            cm.insert("ray".into(), reals(&c.ray));
            cm.insert("slope".into(), real(c.slope.to_f64_lossy()));
            Value::Object(cm)
        }),
    );
    Value::Object(m)
}

pub fn psi_text<T: Real>(p: &GrowthProfile<T>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "psi          {}", real_text(p.psi.to_f64()));
    if let Some(t) = &p.theta_star {
        let parts: Vec<String> = t.iter().map(|v| real_text(v.to_f64_lossy())).collect();
        let _ = writeln!(s, "theta*       [{}]", parts.join(", "));
    }
    if let Some(v) = p.stationarity {
        let _ = writeln!(s, "stationarity {}", real_text(v.to_f64_lossy()));
    }
    if p.boundary {
        let _ = writeln!(s, "note         minimizer far out; direction is near the boundary of the cone");
    }
    if let Some(c) = &p.certificate {
        let _ = writeln!(s, "certificate  {} slope {}", kind_name(c.kind), real_text(c.slope.to_f64_lossy()));
    }
    s
}

fn prediction_fields<T: Real>(m: &mut Map<String, Value>, p: &Prediction<T>) {
    m.insert("predicted".into(), opt(p.value, |v| real(v.to_f64_lossy())));
    m.insert("log_predicted".into(), opt(p.log_value, |v| real(v.to_f64_lossy())));
    m.insert("refusal".into(), opt(p.refusal.as_ref(), |r| Value::String(r.reason().into())));
    m.insert("psi".into(), opt(p.psi, psi_value));
    m.insert("theta_star".into(), opt(p.theta_star.as_ref(), reals));
    m.insert("sigma".into(), opt(p.sigma, |v| real(v.to_f64_lossy())));
    m.insert("r".into(), Value::from(p.dim));
}

pub fn count_json<T: Real>(r: &CountReport<T>) -> Value {
    let mut m = Map::new();
    m.insert("n".into(), Value::from(r.query.n));
    m.insert("from".into(), Value::from(r.query.q));
    m.insert("to".into(), Value::from(r.query.q_prime));
    m.insert("target".into(), integers(&r.query.target));
    m.insert("exact".into(), integer(&r.exact));
    prediction_fields(&mut m, &r.prediction);
    m.insert("ratio".into(), opt(r.ratio, |v| real(v.to_f64_lossy())));
    Value::Object(m)
}

pub fn convergence_json<T: Real>(c: &ConvergenceReport<T>) -> Value {
    let mut m = Map::new();
    m.insert("r".into(), Value::from(c.dim));
    m.insert("growth_rate".into(), opt(c.growth_rate, |v| real(v.to_f64_lossy())));
    m.insert("expected_growth_rate".into(), opt(c.expected_growth_rate, |v| real(v.to_f64_lossy())));
    m.insert("exponent".into(), opt(c.exponent, |v| real(v.to_f64_lossy())));
    m.insert("expected_exponent".into(), real(c.expected_exponent.to_f64_lossy()));
    m.insert("tail_monotone".into(), Value::Bool(c.tail_monotone));
    m.insert("rows".into(), Value::Array(c.rows.iter().map(count_json).collect()));
    Value::Object(m)
}

/// CSV with columns `n, exact, predicted, ratio, psi, r, sigma`; missing values are empty.
pub fn count_csv<T: Real>(rows: &[CountReport<T>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::OutOfDomain(e.to_string());
    w.write_record(["n", "exact", "predicted", "ratio", "psi", "r", "sigma"]).map_err(io)?;
    for r in rows {
        let f = |v: Option<T>| v.map_or(String::new(), |v| real_text(v.to_f64_lossy()));
        w.write_record([
            r.query.n.to_string(),
            r.exact.to_string(),
            f(r.prediction.value),
            f(r.ratio),
            r.prediction.psi.map_or(String::new(), |p| real_text(p.to_f64())),
            r.prediction.dim.to_string(),
            f(r.prediction.sigma),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::OutOfDomain(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn count_text<T: Real>(rows: &[CountReport<T>]) -> String {
    let mut s = format!("{:>4}  {:>24}  {:>24}  {:>24}  {}\n", "n", "exact", "predicted", "ratio", "note");
    for r in rows {
        let f = |v: Option<T>| v.map_or("-".to_string(), |v| real_text(v.to_f64_lossy()));
        let note = r.prediction.refusal.as_ref().map_or(String::new(), |x| format!("refused: {}", x.reason()));
        let _ = writeln!(s, "{:>4}  {:>24}  {:>24}  {:>24}  {}", r.query.n, r.exact, f(r.prediction.value), f(r.ratio), note);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn float_formatting() {
        assert_eq!(real(std::f64::consts::LN_2).to_string(), "6.9314718055994529e-1");
        assert_eq!(real(0.0).to_string(), "0.0000000000000000e+0");
        assert_eq!(real(-0.0).to_string(), "0.0000000000000000e+0");
        assert_eq!(real(f64::NEG_INFINITY), Value::String("-infinity".into()));
        let back: f64 = real_text(0.1).parse().unwrap();
        assert_eq!(back, 0.1);
    }

    #[test]
    fn big_integers_stay_exact() {
        let v: BigUint = "123456789012345678901234567890".parse().unwrap();
        assert_eq!(integer(&v).to_string(), "123456789012345678901234567890");
    }

    #[test]
    fn analysis_is_deterministic() {
        let g = Graph::Plain(fixtures::fibonacci());
        let a = to_canonical_string(&analyze(&g).unwrap().to_json());
        let b = to_canonical_string(&analyze(&g).unwrap().to_json());
        assert_eq!(a, b);
        assert!(a.find("\"vertices\"").unwrap() < a.find("\"delta\"").unwrap());
    }

    #[test]
    fn csv_header() {
        let s = count_csv::<f64>(&[]).unwrap();
        assert_eq!(s, "n,exact,predicted,ratio,psi,r,sigma\n");
    }
}
