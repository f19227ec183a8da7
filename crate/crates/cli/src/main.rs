use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dircount::counting::{Budget, CountQuery, Predictor};
use dircount::growth::{Growth, SoficGrowth, SolverOptions};
use dircount::report::{self, to_canonical_string};
use dircount::verify::{verify, VerifyOptions};
use dircount::{Error, Graph};
use nalgebra::DVector;
use serde_json::Value;

#[derive(Parser, Debug)]
#[command(name = "dircount", version, about = "Directional path counts in finite directed graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,

    /// Solver tolerance (psi, count) or derivative-check tolerance (verify).
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Worker threads; 1 runs everything serially.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Args, Debug)]
struct GraphArgs {
    /// Graph document (JSON).
    #[arg(long)]
    graph: PathBuf,

    /// Ignore edge labels and work with the underlying graph.
    #[arg(long)]
    plain: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Period, growth rate, maximizing direction and lattice data of a graph.
    Analyze(GraphArgs),
    /// Growth indicator along a direction.
    Psi {
        #[command(flatten)]
        graph: GraphArgs,
        /// Comma-separated direction in edge order (label order for labelled graphs).
        #[arg(long)]
        direction: String,
    },
    /// Exact counts and their local-limit predictions.
    Count {
        #[command(flatten)]
        graph: GraphArgs,
        /// Comma-separated normalized target vector.
        #[arg(long, conflicts_with = "ray")]
        target: Option<String>,
        /// Start vertex (name or index); defaults to the first vertex.
        #[arg(long)]
        from: Option<String>,
        /// End vertex (name or index); defaults to the start vertex.
        #[arg(long)]
        to: Option<String>,
        #[arg(long, conflicts_with = "lengths")]
        length: Option<usize>,
        /// Length range `A:B:STEP`.
        #[arg(long)]
        lengths: Option<String>,
        /// Follow the ray through --direction over the given lengths.
        #[arg(long, requires = "direction")]
        ray: bool,
        #[arg(long)]
        direction: Option<String>,
        /// Run the exact count even when the feasibility screen already proves it is zero.
        #[arg(long)]
        force: bool,
    },
    /// Seeded property sweeps on one graph.
    Verify {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random points per suite.
        #[arg(long, default_value_t = 25)]
        samples: usize,
        #[arg(long, hide = true, default_value_t = 0.0)]
        inject_lambda_fault: f64,
    },
}

enum Failure {
    Usage(String),
    Lib(Error),
    Verify(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Verify(_) => 3,
            Failure::Lib(e) => match e {
                Error::Malformed(_)
                | Error::EmptyVertexSet
                | Error::EmptyEdgeSet
                | Error::DuplicateId { .. }
                | Error::DanglingEndpoint { .. }
                | Error::PartialLabelling { .. }
                | Error::NondeterministicLabelling { .. }
                | Error::NotConnected { .. } => 2,
                Error::NonConvergence { .. }
                | Error::LinearSolve(_)
                | Error::SolverStalled { .. }
                | Error::Overflow { .. }
                | Error::CyclicGraph { .. } => 3,
                Error::BudgetExceeded(_) => 4,
                _ => 1,
            },
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) | Failure::Verify(m) => m.clone(),
            Failure::Lib(e) => e.to_string(),
        }
    }
}

type Outcome = std::result::Result<String, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(Failure::Verify(out)) => {
            print!("{out}");
            eprintln!("error: property sweep failed");
            ExitCode::from(3)
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: &Cli) -> Outcome {
    if let Some(t) = cli.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Failure::Usage(format!("--tol must be positive, got {t}")));
        }
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    match &cli.command {
        Command::Analyze(ga) => {
            let graph = load(ga)?;
            let a = report::analyze(&graph)?;
            emit(cli.format, &a.to_json(), || a.to_text())
        }
        Command::Psi { graph, direction } => {
            let graph = load(graph)?;
            let x = DVector::from_vec(parse_reals(direction)?);
            let opts = solver_options(cli);
            let profile = match &graph {
                Graph::Labelled(lg) => SoficGrowth::<f64>::new(lg)?.with_options(opts).psi(&x)?,
                Graph::Plain(g) => Growth::<f64>::new(g)?.with_options(opts).psi(&x)?,
            };
            emit(cli.format, &report::psi_json(&profile), || report::psi_text(&profile))
        }
        Command::Count { graph, target, from, to, length, lengths, ray, direction, force } => {
            let graph = load(graph)?;
            let mut budget = Budget::from_env()?;
            budget.parallel = cli.threads != Some(1);
            let predictor = match &graph {
                Graph::Labelled(lg) => Predictor::<f64>::sofic(lg)?,
                Graph::Plain(g) => Predictor::<f64>::new(g)?,
            }
            .with_budget(budget)
            .with_solver_options(solver_options(cli));
            let g = graph.base();
            let q = vertex(g, from.as_deref(), 0)?;
            let q_prime = vertex(g, to.as_deref(), q)?;
            let ns = match (length, lengths) {
                (Some(n), None) => vec![*n],
                (None, Some(spec)) => parse_lengths(spec)?,
                _ => return Err(Failure::Usage("give --length N or --lengths A:B:STEP".into())),
            };
            if *ray {
                let d = DVector::from_vec(parse_reals(direction.as_deref().expect("clap enforces --direction"))?);
                if d.len() != predictor.num_coords() {
                    return Err(Error::DimensionMismatch { expected: predictor.num_coords(), got: d.len() }.into());
                }
                let rep = predictor.convergence_report(&d, q, q_prime, &ns)?;
                return match cli.format {
                    Format::Json => Ok(to_canonical_string(&report::convergence_json(&rep))),
                    Format::Csv => Ok(report::count_csv(&rep.rows)?),
                    Format::Text => {
                        let mut s = report::count_text(&rep.rows);
                        let f = |v: Option<f64>| v.map_or("-".into(), report::real_text);
                        s.push_str(&format!("growth rate  {} (expected {})\n", f(rep.growth_rate), f(rep.expected_growth_rate)));
                        s.push_str(&format!("exponent     {} (expected {})\n", f(rep.exponent), report::real_text(rep.expected_exponent)));
                        Ok(s)
                    }
                };
            }
            let target = target.as_deref().ok_or_else(|| Failure::Usage("count needs --target, or --ray with --direction".into()))?;
            let target = parse_integers(target)?;
            let mut rows = Vec::with_capacity(ns.len());
            for n in ns {
                let query = CountQuery { n, q, q_prime, target: target.clone() };
                predictor.check_query(&query)?;
                let row = if *force || predictor.prescreen(&query).is_ok() {
                    predictor.report(&query)?
                } else {
                    // The screen proves the count is zero; skip the dynamic program.
                    let prediction = predictor.predict(&query)?;
                    dircount::counting::CountReport { query, exact: Default::default(), prediction, ratio: None }
                };
                rows.push(row);
            }
            match cli.format {
                Format::Json if rows.len() == 1 => Ok(to_canonical_string(&report::count_json(&rows[0]))),
                Format::Json => Ok(to_canonical_string(&Value::Array(rows.iter().map(report::count_json).collect()))),
                Format::Csv => Ok(report::count_csv(&rows)?),
                Format::Text => Ok(report::count_text(&rows)),
            }
        }
        Command::Verify { graph, seed, samples, inject_lambda_fault } => {
            let graph = load(graph)?;
            let mut opts = VerifyOptions { seed: *seed, samples: *samples, lambda_fault: *inject_lambda_fault, ..VerifyOptions::default() };
            if let Some(t) = cli.tol {
                opts.tol = t;
            }
            let rep = verify(&graph, &opts)?;
            let out = emit(cli.format, &rep.to_json(), || rep.to_text())?;
            if rep.ok() {
                Ok(out)
            } else {
                Err(Failure::Verify(out))
            }
        }
    }
}

fn solver_options(cli: &Cli) -> SolverOptions<f64> {
    let mut o = SolverOptions::default();
    if let Some(t) = cli.tol {
        o.tol = t;
    }
    o
}

fn load(ga: &GraphArgs) -> std::result::Result<Graph, Failure> {
    let text = std::fs::read_to_string(&ga.graph)
        .map_err(|e| Failure::Lib(Error::Malformed(format!("{}: {e}", ga.graph.display()))))?;
    let graph = dircount::graph::parse_graph(&text)?;
    graph.base().check_connected()?;
    Ok(match graph {
        Graph::Labelled(lg) if ga.plain => Graph::Plain(lg.base().clone()),
        other => other,
    })
}

fn emit(format: Format, json: &Value, text: impl FnOnce() -> String) -> Outcome {
    match format {
        Format::Json => Ok(to_canonical_string(json)),
        Format::Text => Ok(text()),
        Format::Csv => Ok(key_value_csv(json)),
    }
}

/// Two-column CSV of the top-level fields; arrays are joined with `;`.
fn key_value_csv(json: &Value) -> String {
    fn flat(v: &Value) -> String {
        match v {
            Value::Null => String::new(),
            Value::String(s) => s.clone(),
            Value::Array(a) => a.iter().map(flat).collect::<Vec<_>>().join(";"),
            Value::Object(_) => v.to_string(),
            other => other.to_string(),
        }
    }
    let mut s = String::from("key,value\n");
    if let Value::Object(m) = json {
        for (k, v) in m {
            let cell = flat(v);
            if cell.contains([',', '"', '\n']) {
                s.push_str(&format!("{k},\"{}\"\n", cell.replace('"', "\"\"")));
            } else {
                s.push_str(&format!("{k},{cell}\n"));
            }
        }
    }
    s
}

fn vertex(g: &dircount::DirectedGraph, name: Option<&str>, default: usize) -> std::result::Result<usize, Failure> {
    let Some(name) = name else { return Ok(default) };
    if let Some(i) = g.vertex_index(name) {
        return Ok(i);
    }
    match name.parse::<usize>() {
        Ok(i) if i < g.num_vertices() => Ok(i),
        _ => Err(Failure::Usage(format!("unknown vertex {name:?}"))),
    }
}

fn split(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|p| !p.is_empty())
}

fn parse_reals(s: &str) -> std::result::Result<Vec<f64>, Failure> {
    split(s)
        .map(|p| p.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Failure::Usage(format!("not a number: {p:?}"))))
        .collect()
}

fn parse_integers(s: &str) -> std::result::Result<Vec<i64>, Failure> {
    split(s).map(|p| p.parse::<i64>().map_err(|_| Failure::Usage(format!("not an integer: {p:?}")))).collect()
}

fn parse_lengths(spec: &str) -> std::result::Result<Vec<usize>, Failure> {
    let bad = || Failure::Usage(format!("lengths must look like A:B:STEP, got {spec:?}"));
    let parts: Vec<usize> = spec.split(':').map(|p| p.trim().parse::<usize>().map_err(|_| bad())).collect::<std::result::Result<_, _>>()?;
    match parts[..] {
        [a, b, step] if step > 0 && a <= b => Ok((a..=b).step_by(step).collect()),
        [a, b] if a <= b => Ok((a..=b).collect()),
        _ => Err(bad()),
    }
}
