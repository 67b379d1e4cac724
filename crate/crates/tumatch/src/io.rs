//! JSON file formats for markets, policies, equilibria and results.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tumatch_core::tu::EmbeddingSet;
use tumatch_core::{
    BvnDecomposition, DeterministicPolicy, EquilibriumMatching, Matrix, Policy, PreferenceMatrices, StochasticPolicy,
    SwEstimate,
};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("cannot read {path}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("malformed JSON in {path}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("invalid contents in {path}")]
    Invalid { path: PathBuf, source: tumatch_core::Error },
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, FormatError> {
    let text = fs::read_to_string(path).map_err(|source| FormatError::Read { path: path.into(), source })?;
    serde_json::from_str(&text).map_err(|source| FormatError::Parse { path: path.into(), source })
}

/// Writes pretty JSON to `path`, or to stdout when `path` is `None` or `-`.
pub fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<(), FormatError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializing plain data cannot fail");
    text.push('\n');
    match path {
        Some(p) if p != Path::new("-") => {
            fs::write(p, text).map_err(|source| FormatError::Write { path: p.into(), source })
        }
        _ => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| FormatError::Write { path: "<stdout>".into(), source }),
    }
}

fn rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.to_rows()
}

fn matrix(rows: &[Vec<f64>]) -> Result<Matrix, tumatch_core::Error> {
    if rows.is_empty() {
        return Ok(Matrix::zeros(0, 0));
    }
    Matrix::from_rows(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketFile {
    pub num_candidates: usize,
    pub num_jobs: usize,
    pub p_cj: Vec<Vec<f64>>,
    pub p_jc: Vec<Vec<f64>>,
}

impl MarketFile {
    pub fn from_market(prefs: &PreferenceMatrices) -> Self {
        MarketFile {
            num_candidates: prefs.num_candidates(),
            num_jobs: prefs.num_jobs(),
            p_cj: rows(prefs.p_cj()),
            p_jc: rows(prefs.p_jc()),
        }
    }

    pub fn to_market(&self) -> Result<PreferenceMatrices, tumatch_core::Error> {
        let prefs = PreferenceMatrices::new(matrix(&self.p_cj)?, matrix(&self.p_jc)?)?;
        if (prefs.num_candidates(), prefs.num_jobs()) != (self.num_candidates, self.num_jobs) {
            return Err(tumatch_core::Error::Shape {
                expected: (self.num_candidates, self.num_jobs),
                found: (prefs.num_candidates(), prefs.num_jobs()),
            });
        }
        Ok(prefs)
    }
}

pub fn read_market(path: &Path) -> Result<PreferenceMatrices, FormatError> {
    read_json::<MarketFile>(path)?.to_market().map_err(|source| FormatError::Invalid { path: path.into(), source })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum PolicyFile {
    Deterministic { rankings: Vec<Vec<usize>> },
    Stochastic { matrices: Vec<Vec<Vec<f64>>> },
}

impl PolicyFile {
    pub fn from_policy(policy: &Policy) -> Self {
        match policy {
            Policy::Deterministic(p) => PolicyFile::Deterministic { rankings: p.rankings().to_vec() },
            Policy::Stochastic(p) => PolicyFile::Stochastic { matrices: p.matrices().iter().map(rows).collect() },
        }
    }

    pub fn to_policy(&self) -> Result<Policy, tumatch_core::Error> {
        Ok(match self {
            PolicyFile::Deterministic { rankings } => DeterministicPolicy::new(rankings.clone())?.into(),
            PolicyFile::Stochastic { matrices } => {
                StochasticPolicy::new(matrices.iter().map(|m| matrix(m)).collect::<Result<_, _>>()?)?.into()
            }
        })
    }
}

pub fn read_policy(path: &Path) -> Result<Policy, FormatError> {
    read_json::<PolicyFile>(path)?.to_policy().map_err(|source| FormatError::Invalid { path: path.into(), source })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumFile {
    pub mu: Vec<Vec<f64>>,
    pub mu_c0: Vec<f64>,
    pub mu_0j: Vec<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

impl EquilibriumFile {
    pub fn from_equilibrium(eq: &EquilibriumMatching) -> Self {
        EquilibriumFile {
            mu: rows(&eq.mu),
            mu_c0: eq.mu_c0.clone(),
            mu_0j: eq.mu_0j.clone(),
            beta: eq.beta,
            iterations: eq.iterations,
            residual: eq.residual,
            converged: eq.converged,
        }
    }

    pub fn to_equilibrium(&self) -> Result<EquilibriumMatching, tumatch_core::Error> {
        let eq = EquilibriumMatching {
            mu: matrix(&self.mu)?,
            mu_c0: self.mu_c0.clone(),
            mu_0j: self.mu_0j.clone(),
            beta: self.beta,
            iterations: self.iterations,
            residual: self.residual,
            converged: self.converged,
        };
        eq.validate()?;
        Ok(eq)
    }
}

pub fn read_equilibrium(path: &Path) -> Result<EquilibriumMatching, FormatError> {
    read_json::<EquilibriumFile>(path)?
        .to_equilibrium()
        .map_err(|source| FormatError::Invalid { path: path.into(), source })
}

/// Low-rank factors with `p_cj = <phi1_c, psi1_j>` and `p_jc = <phi2_c, psi2_j>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturesFile {
    pub phi1: Vec<Vec<f64>>,
    pub phi2: Vec<Vec<f64>>,
    pub psi1: Vec<Vec<f64>>,
    pub psi2: Vec<Vec<f64>>,
}

pub struct Features {
    pub phi1: Matrix,
    pub phi2: Matrix,
    pub psi1: Matrix,
    pub psi2: Matrix,
}

impl FeaturesFile {
    pub fn to_features(&self) -> Result<Features, tumatch_core::Error> {
        Ok(Features {
            phi1: matrix(&self.phi1)?,
            phi2: matrix(&self.phi2)?,
            psi1: matrix(&self.psi1)?,
            psi2: matrix(&self.psi2)?,
        })
    }
}

pub fn read_features(path: &Path) -> Result<Features, FormatError> {
    read_json::<FeaturesFile>(path)?.to_features().map_err(|source| FormatError::Invalid { path: path.into(), source })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingFile {
    pub dim: usize,
    pub candidate_vectors: Vec<Vec<f64>>,
    pub job_vectors: Vec<Vec<f64>>,
    pub max_feature_deviation: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_k: Option<Vec<Vec<usize>>>,
}

impl EmbeddingFile {
    pub fn from_embeddings(emb: &EmbeddingSet) -> Self {
        EmbeddingFile {
            dim: emb.dim,
            candidate_vectors: rows(&emb.candidate_vectors),
            job_vectors: rows(&emb.job_vectors),
            max_feature_deviation: emb.max_feature_deviation,
            top_k: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BvnTerm {
    pub weight: f64,
    pub ranking: Vec<usize>,
}

/// One decomposition per candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BvnFile {
    pub candidates: Vec<Vec<BvnTerm>>,
}

impl BvnFile {
    pub fn from_decompositions(decs: &[BvnDecomposition]) -> Self {
        BvnFile {
            candidates: decs
                .iter()
                .map(|d| d.terms().iter().map(|(w, r)| BvnTerm { weight: *w, ranking: r.clone() }).collect())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationFile {
    pub mean: f64,
    pub stderr: f64,
    pub gini_candidates: f64,
    pub gini_employers: f64,
    pub n_sims: usize,
    pub seed: u64,
}

impl SimulationFile {
    pub fn from_estimate(est: &SwEstimate) -> Self {
        SimulationFile {
            mean: est.mean,
            stderr: est.stderr,
            gini_candidates: est.gini_candidates(),
            gini_employers: est.gini_employers(),
            n_sims: est.n_sims,
            seed: est.seed,
        }
    }
}
