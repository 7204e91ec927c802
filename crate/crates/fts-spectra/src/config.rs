//! TOML configuration schema: a process model plus one experiment, with
//! strict parsing (unknown keys are errors) and structural validation that
//! reports every problem with its field path.
//!
//! Frequencies are preferably given as Fourier-grid indices (`freq-index`);
//! plain radians are accepted for the single-frequency experiments but grid
//! indices are required where exact grid membership matters.

use serde::{Deserialize, Serialize};

use fts_core::error::Result;
use fts_core::hilbert::{FunctionVector, LinOperator};
use fts_core::models::{
    ArchModel, DependentErrorLinearModel, InnovationDistribution, InnovationSpec, LinearModel,
    ProcessModel, SamplePath,
};
use fts_core::montecarlo::TestVector;
use fts_core::report::load_path_matrix;

fn default_model_id() -> String {
    "model".to_string()
}

fn default_tail_tol() -> f64 {
    1e-13
}

/// Top-level configuration: a seed, a model, and one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    #[serde(default = "default_model_id")]
    pub model_id: String,
    pub model: ModelConfig,
    pub experiment: ExperimentConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistributionConfig {
    #[default]
    Gaussian,
    ScaledUniform,
    ScaledRademacher,
}

impl DistributionConfig {
    fn to_core(self) -> InnovationDistribution {
        match self {
            DistributionConfig::Gaussian => InnovationDistribution::Gaussian,
            DistributionConfig::ScaledUniform => InnovationDistribution::ScaledUniform,
            DistributionConfig::ScaledRademacher => InnovationDistribution::ScaledRademacher,
        }
    }
}

/// Process models. Matrices are written as arrays of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", rename_all_fields = "kebab-case", deny_unknown_fields)]
pub enum ModelConfig {
    /// Independent innovations; give `dim` for the identity covariance or an
    /// explicit `covariance` matrix.
    WhiteNoise {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dim: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        covariance: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        distribution: DistributionConfig,
    },
    /// Finite moving average with explicit coefficient matrices Psi_0..Psi_K.
    Ma {
        coefficients: Vec<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        covariance: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        distribution: DistributionConfig,
    },
    /// Geometrically decaying coefficients `rho^k * base`, truncated where
    /// the operator-norm tail drops below `tail-tol`.
    Geometric {
        base: Vec<Vec<f64>>,
        rho: f64,
        #[serde(default = "default_tail_tol")]
        tail_tol: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        covariance: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        distribution: DistributionConfig,
    },
    /// Outer filter applied to a linear-family driver process.
    DependentError {
        coefficients: Vec<Vec<Vec<f64>>>,
        driver: Box<ModelConfig>,
    },
    /// Conditionally heteroscedastic recursion with coordinatewise volatility
    /// `sigma_t^2 = delta + beta (X_{t-1} .* X_{t-1})`.
    Arch {
        delta: Vec<f64>,
        beta: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        covariance: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        distribution: DistributionConfig,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        burn_in: Option<usize>,
    },
    /// Observations read from a whitespace matrix file (rows = time).
    PathFile { path: String },
}

/// Where a reference (limit) operator comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", rename_all_fields = "kebab-case", deny_unknown_fields)]
pub enum ReferenceConfig {
    #[default]
    ClosedForm,
    LagSum {
        max_lag: usize,
    },
    MonteCarlo {
        pilot_reps: usize,
    },
}

impl ReferenceConfig {
    pub fn to_core(self) -> fts_core::montecarlo::ReferenceProvenance {
        match self {
            ReferenceConfig::ClosedForm => fts_core::montecarlo::ReferenceProvenance::ClosedForm,
            ReferenceConfig::LagSum { max_lag } => {
                fts_core::montecarlo::ReferenceProvenance::LagSum { max_lag }
            }
            ReferenceConfig::MonteCarlo { pilot_reps } => {
                fts_core::montecarlo::ReferenceProvenance::MonteCarlo { pilot_reps }
            }
        }
    }
}

/// A labelled projection direction (normalized when built).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct UVectorConfig {
    pub label: String,
    pub coords: Vec<f64>,
}

/// Replaces (or adds to) the default bounds of one reported statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ThresholdOverride {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

/// How the spectral density table is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", rename_all_fields = "kebab-case", deny_unknown_fields)]
pub enum SpectrumProvenance {
    ClosedForm,
    LagSum { max_lag: usize },
    Fejer { max_lag: usize, n: usize },
    MonteCarlo { reps: usize, n: usize },
}

/// The experiments the `run` subcommand executes, plus `spectrum` for the
/// table writer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", rename_all_fields = "kebab-case", deny_unknown_fields)]
pub enum ExperimentConfig {
    /// Single-frequency CLT diagnostics for the scaled DFT.
    Clt {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        theta: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        freq_index: Option<i64>,
        n: usize,
        reps: usize,
        #[serde(default)]
        reference: ReferenceConfig,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        u_vectors: Vec<UVectorConfig>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        thresholds: Vec<ThresholdOverride>,
    },
    /// Real-limit diagnostics for the scaled partial sums (theta = 0).
    Theta0 {
        n: usize,
        reps: usize,
        #[serde(default)]
        reference: ReferenceConfig,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        u_vectors: Vec<UVectorConfig>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        thresholds: Vec<ThresholdOverride>,
    },
    /// Joint second-order structure at two distinct grid frequencies.
    CrossFreq {
        freq_index: i64,
        freq_index_prime: i64,
        n: usize,
        reps: usize,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        u_vectors: Vec<UVectorConfig>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        thresholds: Vec<ThresholdOverride>,
    },
    /// Exact martingale-plus-remainder reconstruction at each length, with
    /// the conditional-part decay averaged over `reps` paths. A `freq-index`
    /// is resolved on the grid of the largest length and the resulting
    /// frequency is held fixed across the whole list.
    Decomposition {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        theta: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        freq_index: Option<i64>,
        n_list: Vec<usize>,
        reps: usize,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        thresholds: Vec<ThresholdOverride>,
    },
    /// Summability diagnostics of the projection moment series.
    A3 {
        t_max: usize,
        reps: usize,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        thresholds: Vec<ThresholdOverride>,
    },
    /// Coupling-error decay across approximation orders.
    MApprox {
        m_list: Vec<usize>,
        reps: usize,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        thresholds: Vec<ThresholdOverride>,
    },
    /// Spectral density table on a symmetric grid (the `spectrum`
    /// subcommand).
    Spectrum {
        provenance: SpectrumProvenance,
        grid: usize,
    },
}

impl ExperimentConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentConfig::Clt { .. } => "clt",
            ExperimentConfig::Theta0 { .. } => "theta0",
            ExperimentConfig::CrossFreq { .. } => "cross-freq",
            ExperimentConfig::Decomposition { .. } => "decomposition",
            ExperimentConfig::A3 { .. } => "a3",
            ExperimentConfig::MApprox { .. } => "m-approx",
            ExperimentConfig::Spectrum { .. } => "spectrum",
        }
    }
}

/// Parse a config, rejecting unknown keys.
pub fn parse_config(text: &str) -> std::result::Result<Config, String> {
    toml::from_str(text).map_err(|e| e.to_string())
}

fn check_matrix(errors: &mut Vec<String>, field: &str, rows: &[Vec<f64>]) -> Option<usize> {
    if rows.is_empty() {
        errors.push(format!("{field}: matrix must have at least one row"));
        return None;
    }
    let d = rows.len();
    for (i, row) in rows.iter().enumerate() {
        if row.len() != d {
            errors.push(format!(
                "{field}: row {i} has {} entries, expected {d} (square matrix)",
                row.len()
            ));
            return None;
        }
    }
    Some(d)
}

fn check_model(errors: &mut Vec<String>, field: &str, model: &ModelConfig) -> Option<usize> {
    match model {
        ModelConfig::WhiteNoise {
            dim, covariance, ..
        } => match (dim, covariance) {
            (Some(_), Some(_)) | (None, None) => {
                errors.push(format!(
                    "{field}.white-noise: set exactly one of dim and covariance"
                ));
                None
            }
            (Some(d), None) => {
                if *d == 0 {
                    errors.push(format!("{field}.white-noise.dim: must be at least 1"));
                    None
                } else {
                    Some(*d)
                }
            }
            (None, Some(cov)) => check_matrix(errors, &format!("{field}.white-noise.covariance"), cov),
        },
        ModelConfig::Ma {
            coefficients,
            covariance,
            ..
        } => {
            if coefficients.is_empty() {
                errors.push(format!(
                    "{field}.ma.coefficients: need at least the lag-0 matrix"
                ));
                return None;
            }
            let mut dim = None;
            for (k, m) in coefficients.iter().enumerate() {
                let dk = check_matrix(errors, &format!("{field}.ma.coefficients[{k}]"), m)?;
                match dim {
                    None => dim = Some(dk),
                    Some(d) if d != dk => {
                        errors.push(format!(
                            "{field}.ma.coefficients[{k}]: dimension {dk} != {d}"
                        ));
                        return None;
                    }
                    _ => {}
                }
            }
            if let (Some(d), Some(cov)) = (dim, covariance) {
                let dc = check_matrix(errors, &format!("{field}.ma.covariance"), cov)?;
                if dc != d {
                    errors.push(format!("{field}.ma.covariance: dimension {dc} != {d}"));
                    return None;
                }
            }
            dim
        }
        ModelConfig::Geometric {
            base,
            rho,
            tail_tol,
            covariance,
            ..
        } => {
            if !(*rho > 0.0 && *rho < 1.0) {
                errors.push(format!(
                    "{field}.geometric.rho: must lie strictly between 0 and 1, got {rho}"
                ));
            }
            if !(*tail_tol > 0.0) {
                errors.push(format!(
                    "{field}.geometric.tail-tol: must be positive, got {tail_tol}"
                ));
            }
            let d = check_matrix(errors, &format!("{field}.geometric.base"), base)?;
            if let Some(cov) = covariance {
                let dc = check_matrix(errors, &format!("{field}.geometric.covariance"), cov)?;
                if dc != d {
                    errors.push(format!("{field}.geometric.covariance: dimension {dc} != {d}"));
                    return None;
                }
            }
            Some(d)
        }
        ModelConfig::DependentError {
            coefficients,
            driver,
        } => {
            if matches!(
                driver.as_ref(),
                ModelConfig::Arch { .. } | ModelConfig::PathFile { .. } | ModelConfig::DependentError { .. }
            ) {
                errors.push(format!(
                    "{field}.dependent-error.driver: must be a plain linear-family model"
                ));
                return None;
            }
            let dd = check_model(errors, &format!("{field}.dependent-error.driver"), driver)?;
            if coefficients.is_empty() {
                errors.push(format!(
                    "{field}.dependent-error.coefficients: need at least the lag-0 matrix"
                ));
                return None;
            }
            for (k, m) in coefficients.iter().enumerate() {
                let dk = check_matrix(
                    errors,
                    &format!("{field}.dependent-error.coefficients[{k}]"),
                    m,
                )?;
                if dk != dd {
                    errors.push(format!(
                        "{field}.dependent-error.coefficients[{k}]: dimension {dk} != driver dimension {dd}"
                    ));
                    return None;
                }
            }
            Some(dd)
        }
        ModelConfig::Arch {
            delta,
            beta,
            covariance,
            ..
        } => {
            if delta.is_empty() {
                errors.push(format!("{field}.arch.delta: must be nonempty"));
                return None;
            }
            for (i, &d) in delta.iter().enumerate() {
                if !(d > 0.0) {
                    errors.push(format!(
                        "{field}.arch.delta[{i}]: must be strictly positive, got {d}"
                    ));
                }
            }
            let d = delta.len();
            if let Some(db) = check_matrix(errors, &format!("{field}.arch.beta"), beta) {
                if db != d {
                    errors.push(format!(
                        "{field}.arch.beta: dimension {db} != delta length {d}"
                    ));
                }
            }
            if let Some(cov) = covariance {
                if let Some(dc) = check_matrix(errors, &format!("{field}.arch.covariance"), cov) {
                    if dc != d {
                        errors.push(format!("{field}.arch.covariance: dimension {dc} != {d}"));
                    }
                }
            }
            Some(d)
        }
        ModelConfig::PathFile { path } => {
            if path.trim().is_empty() {
                errors.push(format!("{field}.path-file.path: must not be empty"));
            }
            None // dimension known only after loading
        }
    }
}

fn check_frequency(
    errors: &mut Vec<String>,
    field: &str,
    theta: Option<f64>,
    freq_index: Option<i64>,
) {
    match (theta, freq_index) {
        (Some(_), Some(_)) | (None, None) => {
            errors.push(format!("{field}: set exactly one of theta and freq-index"));
        }
        (Some(t), None) if !t.is_finite() => {
            errors.push(format!("{field}.theta: must be finite"));
        }
        _ => {}
    }
}

fn check_run_size(errors: &mut Vec<String>, field: &str, n: usize, reps: usize) {
    if reps < 100 {
        errors.push(format!("{field}.reps: R ≥ 100 required, got {reps}"));
    }
    if n < 8 {
        errors.push(format!("{field}.n: n ≥ 8 required, got {n}"));
    }
}

fn check_thresholds(errors: &mut Vec<String>, field: &str, overrides: &[ThresholdOverride]) {
    for (i, t) in overrides.iter().enumerate() {
        if t.name.trim().is_empty() {
            errors.push(format!("{field}[{i}].name: must not be empty"));
        }
        if t.min.is_none() && t.max.is_none() {
            errors.push(format!("{field}[{i}]: set min, max, or both"));
        }
        if let (Some(lo), Some(hi)) = (t.min, t.max) {
            if lo > hi {
                errors.push(format!("{field}[{i}]: min {lo} exceeds max {hi}"));
            }
        }
    }
}

fn check_u_vectors(
    errors: &mut Vec<String>,
    field: &str,
    us: &[UVectorConfig],
    dim: Option<usize>,
) {
    for (i, u) in us.iter().enumerate() {
        if u.label.trim().is_empty() {
            errors.push(format!("{field}[{i}].label: must not be empty"));
        }
        if u.coords.iter().all(|&x| x == 0.0) {
            errors.push(format!("{field}[{i}].coords: must not be the zero vector"));
        }
        if let Some(d) = dim {
            if u.coords.len() != d {
                errors.push(format!(
                    "{field}[{i}].coords: {} entries, model dimension is {d}",
                    u.coords.len()
                ));
            }
        }
    }
}

/// Structural validation; returns every problem found, each prefixed with
/// the offending field path.
pub fn validate(config: &Config) -> Vec<String> {
    let mut errors = Vec::new();
    let dim = check_model(&mut errors, "model", &config.model);
    let simulator = !matches!(config.model, ModelConfig::PathFile { .. });
    let exp = "experiment";
    match &config.experiment {
        ExperimentConfig::Clt {
            theta,
            freq_index,
            n,
            reps,
            u_vectors,
            thresholds,
            ..
        } => {
            let field = format!("{exp}.clt");
            check_frequency(&mut errors, &field, *theta, *freq_index);
            check_run_size(&mut errors, &field, *n, *reps);
            check_u_vectors(&mut errors, &format!("{field}.u-vectors"), u_vectors, dim);
            check_thresholds(&mut errors, &format!("{field}.thresholds"), thresholds);
            if !simulator {
                errors.push(format!("{field}: needs a generative model, not path-file"));
            }
        }
        ExperimentConfig::Theta0 {
            n,
            reps,
            u_vectors,
            thresholds,
            ..
        } => {
            let field = format!("{exp}.theta0");
            check_run_size(&mut errors, &field, *n, *reps);
            check_u_vectors(&mut errors, &format!("{field}.u-vectors"), u_vectors, dim);
            check_thresholds(&mut errors, &format!("{field}.thresholds"), thresholds);
            if !simulator {
                errors.push(format!("{field}: needs a generative model, not path-file"));
            }
        }
        ExperimentConfig::CrossFreq {
            freq_index,
            freq_index_prime,
            n,
            reps,
            u_vectors,
            thresholds,
        } => {
            let field = format!("{exp}.cross-freq");
            check_run_size(&mut errors, &field, *n, *reps);
            if (*n as i64) > 0 && (freq_index - freq_index_prime).rem_euclid(*n as i64) == 0 {
                errors.push(format!(
                    "{field}: freq-index {freq_index} and freq-index-prime {freq_index_prime} name the same frequency mod n"
                ));
            }
            check_u_vectors(&mut errors, &format!("{field}.u-vectors"), u_vectors, dim);
            check_thresholds(&mut errors, &format!("{field}.thresholds"), thresholds);
            if !simulator {
                errors.push(format!("{field}: needs a generative model, not path-file"));
            }
        }
        ExperimentConfig::Decomposition {
            theta,
            freq_index,
            n_list,
            reps,
            thresholds,
        } => {
            let field = format!("{exp}.decomposition");
            check_frequency(&mut errors, &field, *theta, *freq_index);
            if n_list.is_empty() {
                errors.push(format!("{field}.n-list: must not be empty"));
            }
            if n_list.iter().any(|&n| n == 0) {
                errors.push(format!("{field}.n-list: lengths must be at least 1"));
            }
            if n_list.windows(2).any(|w| w[1] <= w[0]) {
                errors.push(format!("{field}.n-list: lengths must be strictly increasing"));
            }
            if *reps == 0 {
                errors.push(format!("{field}.reps: must be at least 1"));
            }
            check_thresholds(&mut errors, &format!("{field}.thresholds"), thresholds);
            match &config.model {
                ModelConfig::WhiteNoise { .. }
                | ModelConfig::Ma { .. }
                | ModelConfig::Geometric { .. }
                | ModelConfig::DependentError { .. } => {}
                _ => errors.push(format!(
                    "{field}: requires a linear-family model (the projections are computed exactly)"
                )),
            }
        }
        ExperimentConfig::A3 {
            t_max,
            reps,
            thresholds,
        } => {
            let field = format!("{exp}.a3");
            if *t_max == 0 {
                errors.push(format!("{field}.t-max: must be at least 1"));
            }
            if *reps == 0 {
                errors.push(format!("{field}.reps: must be at least 1"));
            }
            check_thresholds(&mut errors, &format!("{field}.thresholds"), thresholds);
            if !simulator {
                errors.push(format!("{field}: needs a generative model, not path-file"));
            }
        }
        ExperimentConfig::MApprox {
            m_list,
            reps,
            thresholds,
        } => {
            let field = format!("{exp}.m-approx");
            if m_list.is_empty() {
                errors.push(format!("{field}.m-list: must not be empty"));
            }
            if m_list.iter().any(|&m| m == 0) {
                errors.push(format!("{field}.m-list: coupling orders must be at least 1"));
            }
            if *reps == 0 {
                errors.push(format!("{field}.reps: must be at least 1"));
            }
            check_thresholds(&mut errors, &format!("{field}.thresholds"), thresholds);
            if !simulator {
                errors.push(format!("{field}: needs a generative model, not path-file"));
            }
        }
        ExperimentConfig::Spectrum { provenance, grid } => {
            let field = format!("{exp}.spectrum");
            if *grid < 8 {
                errors.push(format!(
                    "{field}.grid: at least 8 frequencies required, got {grid}"
                ));
            }
            if matches!(config.model, ModelConfig::Arch { .. })
                && !matches!(provenance, SpectrumProvenance::MonteCarlo { .. })
            {
                errors.push(format!(
                    "{field}.provenance: arch has no exact second-order structure; use monte-carlo"
                ));
            }
            match provenance {
                SpectrumProvenance::ClosedForm if !simulator => {
                    errors.push(format!(
                        "{field}.provenance: closed-form needs a generative model, not path-file"
                    ));
                }
                SpectrumProvenance::MonteCarlo { reps, n } => {
                    if !simulator {
                        errors.push(format!(
                            "{field}.provenance: monte-carlo needs a generative model, not path-file"
                        ));
                    }
                    if *reps == 0 || *n == 0 {
                        errors.push(format!(
                            "{field}.provenance.monte-carlo: reps and n must be at least 1"
                        ));
                    }
                }
                SpectrumProvenance::Fejer { n, .. } if *n == 0 => {
                    errors.push(format!("{field}.provenance.fejer.n: must be at least 1"));
                }
                _ => {}
            }
        }
    }
    errors
}

/// A model ready to use: either a simulator or a loaded observation path.
pub enum BuiltModel {
    Simulator(ProcessModel),
    Observed(SamplePath),
}

fn op(rows: &[Vec<f64>]) -> Result<LinOperator> {
    LinOperator::from_real_rows(rows)
}

fn innovations(
    dim: usize,
    covariance: &Option<Vec<Vec<f64>>>,
    distribution: DistributionConfig,
) -> Result<InnovationSpec> {
    match covariance {
        Some(rows) => InnovationSpec::new(op(rows)?, distribution.to_core()),
        None => Ok(InnovationSpec::standard(dim, distribution.to_core())),
    }
}

fn build_linear(model: &ModelConfig) -> Result<LinearModel> {
    match model {
        ModelConfig::WhiteNoise {
            dim,
            covariance,
            distribution,
        } => {
            let spec = match (dim, covariance) {
                (Some(d), None) => InnovationSpec::standard(*d, distribution.to_core()),
                (None, Some(rows)) => InnovationSpec::new(op(rows)?, distribution.to_core())?,
                _ => unreachable!("rejected by validate"),
            };
            Ok(LinearModel::white_noise(spec))
        }
        ModelConfig::Ma {
            coefficients,
            covariance,
            distribution,
        } => {
            let psi = coefficients
                .iter()
                .map(|rows| op(rows))
                .collect::<Result<Vec<_>>>()?;
            let spec = innovations(psi[0].dim(), covariance, *distribution)?;
            LinearModel::new(psi, spec)
        }
        ModelConfig::Geometric {
            base,
            rho,
            tail_tol,
            covariance,
            distribution,
        } => {
            let base = op(base)?;
            let spec = innovations(base.dim(), covariance, *distribution)?;
            LinearModel::geometric(base, *rho, spec, *tail_tol)
        }
        _ => unreachable!("not a plain linear model"),
    }
}

/// Build the configured model, loading path files from disk.
pub fn build_model(config: &Config) -> Result<BuiltModel> {
    match &config.model {
        ModelConfig::WhiteNoise { .. } | ModelConfig::Ma { .. } | ModelConfig::Geometric { .. } => {
            Ok(BuiltModel::Simulator(ProcessModel::Linear(build_linear(
                &config.model,
            )?)))
        }
        ModelConfig::DependentError {
            coefficients,
            driver,
        } => {
            let outer = coefficients
                .iter()
                .map(|rows| op(rows))
                .collect::<Result<Vec<_>>>()?;
            let driver = build_linear(driver)?;
            Ok(BuiltModel::Simulator(ProcessModel::DependentError(
                DependentErrorLinearModel::new(outer, driver)?,
            )))
        }
        ModelConfig::Arch {
            delta,
            beta,
            covariance,
            distribution,
            burn_in,
        } => {
            let spec = innovations(delta.len(), covariance, *distribution)?;
            let mut arch = ArchModel::new(delta.clone(), op(beta)?, spec)?;
            if let Some(b) = burn_in {
                arch = arch.with_burn_in(*b);
            }
            Ok(BuiltModel::Simulator(ProcessModel::Arch(arch)))
        }
        ModelConfig::PathFile { path } => {
            Ok(BuiltModel::Observed(load_path_matrix(path.as_ref())?))
        }
    }
}

/// Build the configured projection directions (empty slice means the library
/// defaults).
pub fn build_test_vectors(us: &[UVectorConfig]) -> Result<Vec<TestVector>> {
    us.iter()
        .map(|u| TestVector::new(u.label.clone(), &FunctionVector::from_real(&u.coords)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
seed = 314
model-id = "white-noise-4"

[model.white-noise]
dim = 4

[experiment.clt]
freq-index = 10
n = 256
reps = 400

[experiment.clt.reference.lag-sum]
max-lag = 2

[[experiment.clt.u-vectors]]
label = "e1"
coords = [1.0, 0.0, 0.0, 0.0]

[[experiment.clt.thresholds]]
name = "gamma-rel-err"
max = 0.2
"#;

    #[test]
    fn sample_config_parses_and_validates() {
        let cfg = parse_config(SAMPLE).unwrap();
        assert_eq!(cfg.seed, 314);
        assert_eq!(cfg.model_id, "white-noise-4");
        assert!(matches!(
            cfg.model,
            ModelConfig::WhiteNoise { dim: Some(4), .. }
        ));
        match &cfg.experiment {
            ExperimentConfig::Clt {
                freq_index,
                reference,
                u_vectors,
                thresholds,
                ..
            } => {
                assert_eq!(*freq_index, Some(10));
                assert_eq!(*reference, ReferenceConfig::LagSum { max_lag: 2 });
                assert_eq!(u_vectors.len(), 1);
                assert_eq!(thresholds[0].max, Some(0.2));
            }
            other => panic!("wrong experiment: {other:?}"),
        }
        assert!(validate(&cfg).is_empty(), "{:?}", validate(&cfg));
    }

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = parse_config(SAMPLE).unwrap();
        let text = toml::to_string(&cfg).unwrap();
        let reparsed = parse_config(&text).unwrap();
        assert_eq!(cfg, reparsed);
        // and a second serialization is byte-identical
        assert_eq!(text, toml::to_string(&reparsed).unwrap());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = format!("{SAMPLE}\nbogus = 1\n");
        let err = parse_config(&bad).unwrap_err();
        assert!(err.contains("bogus"), "{err}");

        let bad = SAMPLE.replace("freq-index = 10", "freq-index = 10\nfrequency = 0.2");
        let err = parse_config(&bad).unwrap_err();
        assert!(err.contains("frequency"), "{err}");
    }

    #[test]
    fn validation_names_offending_fields() {
        let cfg = parse_config(&SAMPLE.replace("reps = 400", "reps = 50")).unwrap();
        let errors = validate(&cfg);
        assert!(
            errors
                .iter()
                .any(|e| e.contains("experiment.clt.reps") && e.contains("R ≥ 100 required")),
            "{errors:?}"
        );

        let cfg = parse_config(&SAMPLE.replace("freq-index = 10", "freq-index = 10\ntheta = 0.5"))
            .unwrap();
        let errors = validate(&cfg);
        assert!(
            errors.iter().any(|e| e.contains("exactly one of theta")),
            "{errors:?}"
        );

        let text = r#"
seed = 1

[model.geometric]
base = [[1.0]]
rho = 1.5

[experiment.a3]
t-max = 10
reps = 1
"#;
        let errors = validate(&parse_config(text).unwrap());
        assert!(
            errors.iter().any(|e| e.contains("model.geometric.rho")),
            "{errors:?}"
        );

        let text = r#"
seed = 1

[model.path-file]
path = "obs.txt"

[experiment.spectrum]
grid = 4

[experiment.spectrum.provenance.lag-sum]
max-lag = 2
"#;
        let errors = validate(&parse_config(text).unwrap());
        assert!(
            errors.iter().any(|e| e.contains("experiment.spectrum.grid")),
            "{errors:?}"
        );
    }

    #[test]
    fn built_models_match_their_configs() {
        let cfg = parse_config(SAMPLE).unwrap();
        match build_model(&cfg).unwrap() {
            BuiltModel::Simulator(m) => {
                assert_eq!(m.dim(), 4);
                assert_eq!(m.label(), "linear");
            }
            _ => panic!("expected a simulator"),
        }

        let text = r#"
seed = 1

[model.arch]
delta = [0.2, 0.2]
beta = [[0.1, 0.0], [0.0, 0.1]]

[experiment.m-approx]
m-list = [1, 2]
reps = 10
"#;
        let cfg = parse_config(text).unwrap();
        assert!(validate(&cfg).is_empty());
        match build_model(&cfg).unwrap() {
            BuiltModel::Simulator(m) => assert_eq!(m.label(), "arch"),
            _ => panic!("expected a simulator"),
        }
    }

    #[test]
    fn dependent_error_driver_must_be_linear() {
        let text = r#"
seed = 1

[model.dependent-error]
coefficients = [[[1.0]]]

[model.dependent-error.driver.arch]
delta = [0.2]
beta = [[0.1]]

[experiment.a3]
t-max = 5
reps = 1
"#;
        let cfg = parse_config(text).unwrap();
        let errors = validate(&cfg);
        assert!(
            errors
                .iter()
                .any(|e| e.contains("driver") && e.contains("linear")),
            "{errors:?}"
        );
    }
}
