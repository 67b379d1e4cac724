use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use tumatch::experiment::{run_experiment, write_csv, ExperimentSpec, Method, OneOrMany};
use tumatch::io::{self, BvnFile, EmbeddingFile, EquilibriumFile, MarketFile, PolicyFile, SimulationFile};
use tumatch_core::sw::DEFAULT_BVN_EPS;
use tumatch_core::{
    build_embeddings, bvn_decompose, estimate_sw, exact_sw, generate_market, naive_policy, reciprocal_policy,
    solve_ipfp, solve_sw, top_k_by_dot, tu_policy, BvnDecomposition, ExaminationFunction, LmoSolver, Policy,
    RankingSource, SwConfig, SyntheticConfig, TuConfig,
};

#[derive(Parser)]
#[command(name = "tumatch", version, about = "Ranking policies for two-sided matching markets")]
struct Cli {
    /// Worker threads, 0 picks one per core.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Only report errors.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a synthetic market.
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank jobs for every candidate with a baseline or the TU equilibrium.
    Rank {
        #[arg(long, value_enum)]
        method: RankMethod,
        #[arg(long)]
        market: PathBuf,
        /// Scale of the preference noise, used by `--method tu`.
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the TU equilibrium by IPFP.
    SolveTu {
        #[arg(long)]
        market: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 100_000)]
        max_iters: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimise the welfare lower bound by Frank–Wolfe.
    SolveSw {
        #[arg(long)]
        market: PathBuf,
        #[arg(long, default_value = "inv")]
        v: String,
        #[arg(long = "T", default_value_t = 50)]
        timesteps: usize,
        #[arg(long, default_value_t = 0.2)]
        eta: f64,
        #[arg(long, value_enum, default_value_t = Lmo::Sorted)]
        lmo: Lmo,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Embed candidates and jobs so inner products reproduce the equilibrium.
    Embed {
        #[arg(long)]
        market: PathBuf,
        #[arg(long)]
        eq: PathBuf,
        #[arg(long)]
        features: PathBuf,
        /// Also list each candidate's top-k jobs by inner product.
        #[arg(long)]
        top_k: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo estimate of expected matches and Gini coefficients.
    Simulate {
        #[arg(long)]
        market: PathBuf,
        #[arg(long)]
        policy: PathBuf,
        #[arg(long, default_value = "inv")]
        v: String,
        #[arg(long, default_value_t = 10_000)]
        sims: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact expected number of matches.
    ExactSw {
        #[arg(long)]
        market: PathBuf,
        #[arg(long)]
        policy: PathBuf,
        #[arg(long, default_value = "inv")]
        v: String,
    },
    /// Decompose a stochastic policy into weighted rankings.
    Bvn {
        #[arg(long)]
        policy: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BVN_EPS)]
        eps: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a batch experiment and write long-form CSV.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum RankMethod {
    Naive,
    Reciprocal,
    Tu,
}

#[derive(Clone, Copy, ValueEnum)]
enum Lmo {
    Sorted,
    Hungarian,
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON spec; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    true_v: Option<Vec<String>>,
    /// Comma-separated: naive, reciprocal, tu:<beta>, sw:<v>.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    sims: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    sw_timesteps: Option<usize>,
    #[arg(long)]
    sw_learning_rate: Option<f64>,
    #[arg(long)]
    tu_tol: Option<f64>,
    #[arg(long)]
    tu_max_iters: Option<usize>,
    #[arg(long)]
    memory_budget_mb: Option<u64>,
    /// Record wall-clock time per row.
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ExperimentArgs {
    fn spec(&self) -> Result<ExperimentSpec> {
        let mut spec = match &self.config {
            Some(p) => io::read_json::<ExperimentSpec>(p)?,
            None => ExperimentSpec::default(),
        };
        macro_rules! over {
            ($($f:ident),*) => {$( if let Some(x) = &self.$f { spec.$f = x.clone(); } )*};
        }
        over!(
            sizes,
            lambdas,
            methods,
            repeats,
            sims,
            seed,
            sw_timesteps,
            sw_learning_rate,
            tu_tol,
            tu_max_iters,
            memory_budget_mb
        );
        if let Some(v) = &self.true_v {
            spec.true_v = OneOrMany::Many(v.clone());
        }
        if self.out.is_some() {
            spec.out = self.out.clone();
        }
        spec.timing |= self.timing;
        Ok(spec)
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct Usage(String);

fn examination(name: &str) -> Result<ExaminationFunction> {
    ExaminationFunction::from_name(name).ok_or_else(|| Usage(format!("unknown examination function {name:?}")).into())
}

fn decompose(policy: &tumatch_core::StochasticPolicy, eps: f64) -> Result<Vec<BvnDecomposition>> {
    Ok(policy.matrices().par_iter().map(|m| bvn_decompose(m, eps)).collect::<Result<Vec<_>, _>>()?)
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Generate { n, lambda, seed, out } => {
            let prefs = generate_market(&SyntheticConfig::new(n, lambda, seed)?)?;
            io::write_json(&MarketFile::from_market(&prefs), out.as_deref())?;
        }
        Command::Rank { method, market, beta, out } => {
            let prefs = io::read_market(&market)?;
            let policy = match method {
                RankMethod::Naive => naive_policy(&prefs),
                RankMethod::Reciprocal => reciprocal_policy(&prefs),
                RankMethod::Tu => {
                    let eq = solve_ipfp(&prefs, &TuConfig::new(beta))?;
                    if !eq.converged {
                        log::warn!("IPFP did not converge; ranking by the last iterate");
                    }
                    tu_policy(&eq, true)?
                }
            };
            io::write_json(&PolicyFile::from_policy(&policy.into()), out.as_deref())?;
        }
        Command::SolveTu { market, beta, tol, max_iters, out } => {
            let prefs = io::read_market(&market)?;
            let eq = solve_ipfp(&prefs, &TuConfig { beta, max_iters, tol })?;
            if eq.converged {
                log::info!("converged after {} sweeps, residual {:e}", eq.iterations, eq.residual);
            } else {
                log::warn!("not converged after {} sweeps, residual {:e}", eq.iterations, eq.residual);
            }
            io::write_json(&EquilibriumFile::from_equilibrium(&eq), out.as_deref())?;
        }
        Command::SolveSw { market, v, timesteps, eta, lmo, out } => {
            let prefs = io::read_market(&market)?;
            let lmo = match lmo {
                Lmo::Sorted => LmoSolver::Sorted,
                Lmo::Hungarian => LmoSolver::Hungarian,
            };
            let cfg = SwConfig { timesteps, learning_rate: eta, lmo, ..SwConfig::new(examination(&v)?) };
            let policy = solve_sw(&prefs, &cfg)?;
            io::write_json(&PolicyFile::from_policy(&policy.into()), out.as_deref())?;
        }
        Command::Embed { market, eq, features, top_k, out } => {
            let prefs = io::read_market(&market)?;
            let eq = io::read_equilibrium(&eq)?;
            if eq.mu.shape() != prefs.p_cj().shape() {
                bail!(Usage("equilibrium does not match the market".into()));
            }
            let f = io::read_features(&features)?;
            let emb = build_embeddings(&f.phi1, &f.phi2, &f.psi1, &f.psi2, &eq)?;
            if emb.max_feature_deviation > 1e-6 {
                log::warn!("features reproduce the preferences only to {:e}", emb.max_feature_deviation);
            }
            let mut file = EmbeddingFile::from_embeddings(&emb);
            if let Some(k) = top_k {
                file.top_k =
                    Some((0..emb.num_candidates()).map(|c| top_k_by_dot(&emb, c, k)).collect::<Result<_, _>>()?);
            }
            io::write_json(&file, out.as_deref())?;
        }
        Command::Simulate { market, policy, v, sims, seed, out } => {
            let prefs = io::read_market(&market)?;
            let policy = io::read_policy(&policy)?;
            let v = examination(&v)?;
            let est = match &policy {
                Policy::Deterministic(p) => estimate_sw(RankingSource::Fixed(p), &prefs, &v, sims, seed)?,
                Policy::Stochastic(p) => {
                    let decs = decompose(p, DEFAULT_BVN_EPS)?;
                    estimate_sw(RankingSource::Sampled(&decs), &prefs, &v, sims, seed)?
                }
            };
            io::write_json(&SimulationFile::from_estimate(&est), out.as_deref())?;
        }
        Command::ExactSw { market, policy, v } => {
            let prefs = io::read_market(&market)?;
            let policy = io::read_policy(&policy)?;
            println!("{}", exact_sw(&policy, &prefs, &examination(&v)?)?);
        }
        Command::Bvn { policy, eps, out } => {
            let Policy::Stochastic(p) = io::read_policy(&policy)? else {
                bail!(Usage("bvn expects a stochastic policy".into()));
            };
            io::write_json(&BvnFile::from_decompositions(&decompose(&p, eps)?), out.as_deref())?;
        }
        Command::Experiment(_) => unreachable!("handled before the pool is built"),
    }
    Ok(())
}

fn experiment(spec: &ExperimentSpec) -> Result<()> {
    let rows = run_experiment(spec).map_err(|e| Usage(e.to_string()))?;
    match spec.out.as_deref() {
        Some(p) if p != Path::new("-") => {
            let file = std::fs::File::create(p).with_context(|| format!("cannot create {}", p.display()))?;
            write_csv(&rows, std::io::BufWriter::new(file))?;
        }
        _ => write_csv(&rows, std::io::stdout().lock())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = (|| -> Result<()> {
        let spec = match &cli.command {
            Command::Experiment(args) => Some(args.spec()?),
            _ => None,
        };
        let quiet = cli.quiet || spec.as_ref().is_some_and(|s| s.quiet);
        let level = if quiet { "error" } else { "info" };
        env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
            .format_timestamp(None)
            .init();
        let threads = cli.threads.or(spec.as_ref().and_then(|s| s.threads)).unwrap_or(0);
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
        match spec {
            Some(s) => experiment(&s),
            None => run(cli.command),
        }
    })();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = if e.downcast_ref::<Usage>().is_some() { 1 } else { tumatch::exit_code(&e) };
            ExitCode::from(code as u8)
        }
    }
}
