//! Batch experiments over synthetic markets, written as long-form CSV.
//!
//! Cell seeds: `cell = derive_chain(seed, [n, lambda.to_bits(), repeat])`,
//! the market is drawn from `derive(cell, 0)` and every evaluation in the
//! cell simulates under `derive(cell, 1)`, so all methods in a cell share
//! one market and one set of random streams.

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tumatch_core::seed::{derive, derive_chain};
use tumatch_core::{
    bvn_decompose, estimate_sw, generate_market, naive_policy, reciprocal_policy, solve_ipfp, solve_sw, tu_policy,
    DeterministicPolicy, ExaminationFunction, PreferenceMatrices, RankingSource, SwConfig, SyntheticConfig, TuConfig,
};

pub const CSV_HEADER: [&str; 15] = [
    "method",
    "n",
    "lambda",
    "beta",
    "assumed_v",
    "true_v",
    "repeat",
    "seed",
    "sw_mean",
    "sw_stderr",
    "gini_candidates",
    "gini_employers",
    "iterations",
    "converged",
    "wall_ms",
];

/// Bytes held at once by the SW baseline: the policy, one Frank–Wolfe
/// scratch copy and the sampled decompositions, all `|C| x |J| x |J|` floats.
pub fn sw_memory_bytes(num_candidates: usize, num_jobs: usize) -> u64 {
    3 * 8 * num_candidates as u64 * num_jobs as u64 * num_jobs as u64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Method {
    Naive,
    Reciprocal,
    Tu { beta: f64 },
    Sw { assumed: String },
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Naive => "naive",
            Method::Reciprocal => "reciprocal",
            Method::Tu { .. } => "tu",
            Method::Sw { .. } => "sw",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Tu { beta } => write!(f, "tu:{beta}"),
            Method::Sw { assumed } => write!(f, "sw:{assumed}"),
            m => f.write_str(m.name()),
        }
    }
}

impl FromStr for Method {
    type Err = String;

    /// `naive`, `reciprocal`, `tu:<beta>` (default 1) or `sw:<v>` (default inv).
    fn from_str(s: &str) -> Result<Self, String> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        match (head, arg) {
            ("naive", None) => Ok(Method::Naive),
            ("reciprocal", None) => Ok(Method::Reciprocal),
            ("tu", None) => Ok(Method::Tu { beta: 1.0 }),
            ("tu", Some(b)) => match b.parse::<f64>() {
                Ok(beta) if beta > 0.0 && beta.is_finite() => Ok(Method::Tu { beta }),
                _ => Err(format!("invalid beta in method {s:?}")),
            },
            ("sw", None) => Ok(Method::Sw { assumed: "inv".into() }),
            ("sw", Some(v)) => match ExaminationFunction::from_name(v) {
                Some(_) => Ok(Method::Sw { assumed: v.into() }),
                None => Err(format!("unknown examination function {v:?} in method {s:?}")),
            },
            _ => Err(format!("unknown method {s:?}")),
        }
    }
}

impl TryFrom<String> for Method {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(String),
    Many(Vec<String>),
}

impl OneOrMany {
    pub fn to_vec(&self) -> Vec<String> {
        match self {
            OneOrMany::One(s) => vec![s.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub sizes: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub true_v: OneOrMany,
    pub methods: Vec<Method>,
    pub repeats: usize,
    pub sims: usize,
    pub seed: u64,
    pub sw_timesteps: usize,
    pub sw_learning_rate: f64,
    pub tu_tol: f64,
    pub tu_max_iters: usize,
    pub memory_budget_mb: u64,
    /// Fill `wall_ms`; off by default so reruns are byte-identical.
    pub timing: bool,
    pub threads: Option<usize>,
    pub quiet: bool,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            sizes: vec![100],
            lambdas: vec![0.5],
            true_v: OneOrMany::One("inv".into()),
            methods: vec![
                Method::Naive,
                Method::Reciprocal,
                Method::Tu { beta: 1.0 },
                Method::Sw { assumed: "inv".into() },
            ],
            repeats: 10,
            sims: 10_000,
            seed: 0,
            sw_timesteps: 50,
            sw_learning_rate: 0.2,
            tu_tol: 1e-9,
            tu_max_iters: 100_000,
            memory_budget_mb: 1024,
            timing: false,
            threads: None,
            quiet: false,
            out: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("invalid experiment spec: {0}")]
pub struct SpecError(pub String);

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), SpecError> {
        let bad = |m: String| Err(SpecError(m));
        if self.methods.is_empty() {
            return bad("method list is empty".into());
        }
        if self.repeats == 0 {
            return bad("repeats must be at least 1".into());
        }
        if self.sims == 0 {
            return bad("sims must be at least 1".into());
        }
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            return bad("sizes must be a non-empty list of positive integers".into());
        }
        if self.lambdas.is_empty() || self.lambdas.iter().any(|l| !(0.0..=1.0).contains(l)) {
            return bad("lambdas must be a non-empty list within [0, 1]".into());
        }
        if self.true_v.to_vec().is_empty() {
            return bad("true_v is empty".into());
        }
        self.examination_functions()?;
        let sw = SwConfig {
            timesteps: self.sw_timesteps,
            learning_rate: self.sw_learning_rate,
            ..SwConfig::new(ExaminationFunction::Inv)
        };
        sw.validate().map_err(|e| SpecError(e.to_string()))?;
        TuConfig { beta: 1.0, max_iters: self.tu_max_iters, tol: self.tu_tol }
            .validate()
            .map_err(|e| SpecError(e.to_string()))?;
        Ok(())
    }

    pub fn examination_functions(&self) -> Result<Vec<ExaminationFunction>, SpecError> {
        self.true_v
            .to_vec()
            .iter()
            .map(|n| ExaminationFunction::from_name(n).ok_or_else(|| SpecError(format!("unknown true_v {n:?}"))))
            .collect()
    }

    pub fn cell_seed(&self, n: usize, lambda: f64, repeat: usize) -> u64 {
        derive_chain(self.seed, &[n as u64, lambda.to_bits(), repeat as u64])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// Non-iterative method finished.
    Done,
    Converged(bool),
    Infeasible,
    Error,
}

impl Status {
    fn is_ok(self) -> bool {
        matches!(self, Status::Done | Status::Converged(_))
    }

    fn label(self) -> &'static str {
        match self {
            Status::Done => "",
            Status::Converged(true) => "true",
            Status::Converged(false) => "false",
            Status::Infeasible => "infeasible",
            Status::Error => "error",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Repeat {
    Index(usize),
    Mean,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub method: Method,
    pub n: usize,
    pub lambda: f64,
    pub true_v: String,
    pub repeat: Repeat,
    pub seed: u64,
    pub sw_mean: Option<f64>,
    pub sw_stderr: Option<f64>,
    pub gini_candidates: Option<f64>,
    pub gini_employers: Option<f64>,
    pub iterations: Option<f64>,
    pub status: Status,
    pub wall_ms: Option<f64>,
    /// Failure reason for error and infeasible rows; logged, not written.
    pub note: Option<String>,
}

impl Row {
    fn record(&self) -> [String; 15] {
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        let (beta, assumed) = match &self.method {
            Method::Tu { beta } => (beta.to_string(), String::new()),
            Method::Sw { assumed } => (String::new(), assumed.clone()),
            _ => (String::new(), String::new()),
        };
        [
            self.method.name().to_string(),
            self.n.to_string(),
            self.lambda.to_string(),
            beta,
            assumed,
            self.true_v.clone(),
            match self.repeat {
                Repeat::Index(r) => r.to_string(),
                Repeat::Mean => "mean".into(),
            },
            self.seed.to_string(),
            opt(self.sw_mean),
            opt(self.sw_stderr),
            opt(self.gini_candidates),
            opt(self.gini_employers),
            opt(self.iterations),
            self.status.label().to_string(),
            opt(self.wall_ms),
        ]
    }
}

pub fn write_csv<W: Write>(rows: &[Row], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    w.flush()?;
    Ok(())
}

fn blank_row(
    method: &Method,
    key: (usize, f64, Repeat, u64),
    true_v: &ExaminationFunction,
    status: Status,
    note: String,
) -> Row {
    let (n, lambda, repeat, seed) = key;
    Row {
        method: method.clone(),
        n,
        lambda,
        true_v: true_v.name().into(),
        repeat,
        seed,
        sw_mean: None,
        sw_stderr: None,
        gini_candidates: None,
        gini_employers: None,
        iterations: None,
        status,
        wall_ms: None,
        note: Some(note),
    }
}

enum Ranker {
    Fixed(DeterministicPolicy),
    Sampled(Vec<tumatch_core::BvnDecomposition>),
}

struct Built {
    ranker: Ranker,
    iterations: Option<f64>,
    status: Status,
}

fn build(method: &Method, prefs: &PreferenceMatrices, spec: &ExperimentSpec) -> Result<Built, String> {
    match method {
        Method::Naive => {
            Ok(Built { ranker: Ranker::Fixed(naive_policy(prefs)), iterations: None, status: Status::Done })
        }
        Method::Reciprocal => {
            Ok(Built { ranker: Ranker::Fixed(reciprocal_policy(prefs)), iterations: None, status: Status::Done })
        }
        Method::Tu { beta } => {
            let cfg = TuConfig { beta: *beta, max_iters: spec.tu_max_iters, tol: spec.tu_tol };
            let eq = solve_ipfp(prefs, &cfg).map_err(|e| e.to_string())?;
            if !eq.converged {
                log::warn!("IPFP stopped after {} sweeps with residual {:e} (beta {beta})", eq.iterations, eq.residual);
            }
            let policy = tu_policy(&eq, true).map_err(|e| e.to_string())?;
            Ok(Built {
                ranker: Ranker::Fixed(policy),
                iterations: Some(eq.iterations as f64),
                status: Status::Converged(eq.converged),
            })
        }
        Method::Sw { assumed } => {
            let v = ExaminationFunction::from_name(assumed).ok_or_else(|| format!("unknown v {assumed:?}"))?;
            let cfg =
                SwConfig { timesteps: spec.sw_timesteps, learning_rate: spec.sw_learning_rate, ..SwConfig::new(v) };
            let policy = solve_sw(prefs, &cfg).map_err(|e| e.to_string())?;
            let decs = policy
                .matrices()
                .par_iter()
                .map(|m| bvn_decompose(m, tumatch_core::sw::DEFAULT_BVN_EPS))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| e.to_string())?;
            Ok(Built {
                ranker: Ranker::Sampled(decs),
                iterations: Some(spec.sw_timesteps as f64),
                status: Status::Converged(true),
            })
        }
    }
}

/// Rows for one market: every method under every true examination function.
/// `sim_seed` keys the simulation streams, `seed` is what the rows report.
pub fn run_market(
    spec: &ExperimentSpec,
    prefs: &PreferenceMatrices,
    key: (usize, f64, Repeat, u64),
    sim_seed: u64,
) -> Result<Vec<Row>, SpecError> {
    let (n, lambda, _, _) = key;
    let true_vs = spec.examination_functions()?;
    let budget = spec.memory_budget_mb * 1024 * 1024;
    let mut rows = Vec::with_capacity(spec.methods.len() * true_vs.len());
    for method in &spec.methods {
        let blank = |v: &ExaminationFunction, status: Status, note: String| blank_row(method, key, v, status, note);
        if matches!(method, Method::Sw { .. }) {
            let need = sw_memory_bytes(prefs.num_candidates(), prefs.num_jobs());
            if need > budget {
                let note = format!("needs about {} MiB, budget is {} MiB", need >> 20, spec.memory_budget_mb);
                log::info!("{method} skipped at n={n}: {note}");
                rows.extend(true_vs.iter().map(|v| blank(v, Status::Infeasible, note.clone())));
                continue;
            }
        }
        let start = Instant::now();
        let built = match build(method, prefs, spec) {
            Ok(b) => b,
            Err(note) => {
                log::warn!("{method} failed at n={n} lambda={lambda}: {note}");
                rows.extend(true_vs.iter().map(|v| blank(v, Status::Error, note.clone())));
                continue;
            }
        };
        let build_ms = start.elapsed().as_secs_f64() * 1e3;
        for v in &true_vs {
            let t = Instant::now();
            let source = match &built.ranker {
                Ranker::Fixed(p) => RankingSource::Fixed(p),
                Ranker::Sampled(d) => RankingSource::Sampled(d),
            };
            match estimate_sw(source, prefs, v, spec.sims, sim_seed) {
                Ok(est) => rows.push(Row {
                    sw_mean: Some(est.mean),
                    sw_stderr: Some(est.stderr),
                    gini_candidates: Some(est.gini_candidates()),
                    gini_employers: Some(est.gini_employers()),
                    iterations: built.iterations,
                    status: built.status,
                    wall_ms: spec.timing.then(|| (build_ms + t.elapsed().as_secs_f64() * 1e3).round()),
                    note: None,
                    ..blank(v, built.status, String::new())
                }),
                Err(e) => {
                    log::warn!("{method} evaluation failed at n={n} lambda={lambda}: {e}");
                    rows.push(blank(v, Status::Error, e.to_string()));
                }
            }
        }
    }
    Ok(rows)
}

fn cell_rows(spec: &ExperimentSpec, n: usize, lambda: f64, repeat: usize) -> Result<Vec<Row>, SpecError> {
    let cell = spec.cell_seed(n, lambda, repeat);
    let key = (n, lambda, Repeat::Index(repeat), cell);
    let prefs = match SyntheticConfig::new(n, lambda, derive(cell, 0)).and_then(|c| generate_market(&c)) {
        Ok(p) => p,
        Err(e) => {
            log::warn!("market generation failed at n={n} lambda={lambda}: {e}");
            let true_vs = spec.examination_functions()?;
            let mut rows = Vec::new();
            for m in &spec.methods {
                rows.extend(true_vs.iter().map(|v| blank_row(m, key, v, Status::Error, e.to_string())));
            }
            return Ok(rows);
        }
    };
    log::info!("cell n={n} lambda={lambda} repeat={repeat}");
    run_market(spec, &prefs, key, derive(cell, 1))
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Mean row per (method, true v) over the repeats of one (n, lambda) group.
fn aggregate(spec: &ExperimentSpec, group: &[Row]) -> Vec<Row> {
    let mut keys: Vec<(Method, String)> = Vec::new();
    for r in group {
        let k = (r.method.clone(), r.true_v.clone());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(method, true_v)| {
            let all: Vec<&Row> = group.iter().filter(|r| r.method == method && r.true_v == true_v).collect();
            let ok: Vec<&Row> = all.iter().copied().filter(|r| r.status.is_ok()).collect();
            let pick = |f: fn(&Row) -> Option<f64>| -> Option<f64> {
                let xs: Vec<f64> = ok.iter().filter_map(|r| f(r)).collect();
                (!xs.is_empty() && xs.len() == ok.len()).then(|| mean(&xs))
            };
            let means: Vec<f64> = ok.iter().filter_map(|r| r.sw_mean).collect();
            let stderr = match means.len() {
                0 => None,
                1 => ok[0].sw_stderr,
                k => {
                    let m = mean(&means);
                    let var = means.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (k - 1) as f64;
                    Some((var / k as f64).sqrt())
                }
            };
            let status = if ok.is_empty() {
                if all.iter().all(|r| r.status == Status::Infeasible) {
                    Status::Infeasible
                } else {
                    Status::Error
                }
            } else if ok.iter().all(|r| r.status == Status::Done) {
                Status::Done
            } else {
                Status::Converged(ok.iter().all(|r| r.status == Status::Converged(true)))
            };
            Row {
                n: all[0].n,
                lambda: all[0].lambda,
                repeat: Repeat::Mean,
                seed: spec.seed,
                sw_mean: pick(|r| r.sw_mean),
                sw_stderr: stderr,
                gini_candidates: pick(|r| r.gini_candidates),
                gini_employers: pick(|r| r.gini_employers),
                iterations: pick(|r| r.iterations),
                status,
                wall_ms: pick(|r| r.wall_ms).map(f64::round),
                note: None,
                method,
                true_v,
            }
        })
        .collect()
}

/// All rows: for each (n, lambda), the per-repeat rows in repeat order
/// followed by the aggregate rows.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<Row>, SpecError> {
    spec.validate()?;
    let cells: Vec<(usize, f64, usize)> = spec
        .sizes
        .iter()
        .flat_map(|&n| spec.lambdas.iter().flat_map(move |&l| (0..spec.repeats).map(move |r| (n, l, r))))
        .collect();
    let per_cell = cells.par_iter().map(|&(n, l, r)| cell_rows(spec, n, l, r)).collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    for group in per_cell.chunks(spec.repeats) {
        let flat: Vec<Row> = group.iter().flatten().cloned().collect();
        let agg = aggregate(spec, &flat);
        rows.extend(flat);
        rows.extend(agg);
    }
    Ok(rows)
}
