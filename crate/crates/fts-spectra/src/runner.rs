//! Experiment dispatch: builds the configured model, runs the experiment
//! through the core library, merges the default pass/fail bounds with any
//! overrides, and assembles the JSONL report.
//!
//! Every scalar statistic in the report is addressable by name for threshold
//! overrides; series entries are addressed as `name.index` (for example
//! `residual-rel.64` or `nu2.3`).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use fts_core::error::{Error, Result};
use fts_core::models::{LinearModel, ProcessModel};
use fts_core::montecarlo::{
    run_clt, run_cross_freq, run_theta0, CltConfig, CltReport, CrossFreqConfig, CrossFreqReport,
    LimitMode, ThetaSpec,
};
use fts_core::martingale::{a2_decay, a3_sum, decomposition_check, m_approx_decay};
use fts_core::report::{
    a2_records, a3_records, clt_records, cross_freq_records, decomposition_records,
    m_approx_records, records_to_jsonl, Record,
};
use fts_core::rng::RngStream;
use fts_core::spectral::{LagCovariances, SpectralEstimate};

use crate::config::{
    build_model, build_test_vectors, BuiltModel, Config, ExperimentConfig, SpectrumProvenance,
    ThresholdOverride,
};

/// One pass/fail bound on a named statistic.
#[derive(Debug, Clone)]
struct Bound {
    name: String,
    min: Option<f64>,
    max: Option<f64>,
}

impl Bound {
    fn max(name: impl Into<String>, max: f64) -> Bound {
        Bound {
            name: name.into(),
            min: None,
            max: Some(max),
        }
    }

    fn range(name: impl Into<String>, min: f64, max: f64) -> Bound {
        Bound {
            name: name.into(),
            min: Some(min),
            max: Some(max),
        }
    }
}

/// The finished experiment: its records plus the overall verdict.
#[derive(Debug)]
pub struct RunOutput {
    pub records: Vec<Record>,
    pub all_passed: bool,
}

impl RunOutput {
    pub fn jsonl(&self) -> String {
        records_to_jsonl(&self.records)
    }

    /// One human-readable line per threshold, plus a verdict line.
    pub fn human_summary(&self) -> String {
        let mut out = String::new();
        let mut checks = 0usize;
        let mut failures = 0usize;
        for r in &self.records {
            if let Record::Threshold {
                name,
                value,
                min,
                max,
                pass,
            } = r
            {
                checks += 1;
                if !pass {
                    failures += 1;
                }
                let verdict = if *pass { "PASS" } else { "FAIL" };
                let mut bounds = String::new();
                if let Some(lo) = min {
                    let _ = write!(bounds, "{lo:.6e} <= ");
                }
                let _ = write!(bounds, "value");
                if let Some(hi) = max {
                    let _ = write!(bounds, " <= {hi:.6e}");
                }
                let _ = writeln!(out, "{verdict} {name} = {value:.6e} ({bounds})");
            }
        }
        let _ = writeln!(
            out,
            "{}: {checks} checks, {failures} failures",
            if failures == 0 { "OK" } else { "FAILED" }
        );
        out
    }
}

/// Collect every addressable statistic: scalars by name, series entries as
/// `name.index`.
fn stat_map(records: &[Record]) -> BTreeMap<String, f64> {
    let mut map = BTreeMap::new();
    for r in records {
        match r {
            Record::Scalar { name, value } => {
                map.insert(name.clone(), *value);
            }
            Record::Series {
                name,
                index,
                values,
            } => {
                for (i, v) in index.iter().zip(values) {
                    map.insert(format!("{name}.{i}"), *v);
                }
            }
            _ => {}
        }
    }
    map
}

/// Default bounds for a single-frequency limit experiment. The relation and
/// imaginary-part checks only exist in the complex-circular regime.
fn clt_bounds(rep: &CltReport) -> Vec<Bound> {
    let mut bounds = vec![
        Bound::max("gamma-rel-err", 0.1),
        Bound::max("trace-rel-err", 0.1),
    ];
    let complex = rep.mode == LimitMode::ComplexCircular;
    if complex {
        bounds.push(Bound::max("relation-rel-norm", 0.1));
    }
    for p in &rep.projections {
        let base = format!("proj.{}", p.label);
        bounds.push(Bound::range(format!("{base}.var-ratio-re"), 0.85, 1.15));
        bounds.push(Bound::max(format!("{base}.ks-re"), 0.05));
        if complex {
            bounds.push(Bound::range(format!("{base}.var-ratio-im"), 0.85, 1.15));
            bounds.push(Bound::max(format!("{base}.ks-im"), 0.05));
            bounds.push(Bound::range(format!("{base}.corr-re-im"), -0.1, 0.1));
        }
    }
    bounds
}

fn cross_freq_bounds(rep: &CrossFreqReport) -> Vec<Bound> {
    let mut bounds = vec![Bound::max("normalized-cross-hs", 0.1)];
    for p in &rep.projections {
        bounds.push(Bound::max(format!("proj.{}.cross-corr", p.label), 0.15));
    }
    bounds
}

/// Merge overrides into the defaults (by statistic name), check that every
/// named statistic exists, and append one threshold record per bound plus the
/// summary record.
fn apply_bounds(
    records: &mut Vec<Record>,
    defaults: Vec<Bound>,
    overrides: &[ThresholdOverride],
) -> Result<()> {
    let stats = stat_map(records);
    let mut bounds: Vec<Bound> = defaults
        .into_iter()
        .filter(|b| stats.contains_key(&b.name))
        .collect();
    for o in overrides {
        if !stats.contains_key(&o.name) {
            let mut known: Vec<&str> = stats.keys().map(|s| s.as_str()).collect();
            known.sort_unstable();
            return Err(Error::InvalidParameter {
                name: "thresholds",
                reason: format!(
                    "no statistic named `{}` in this report; available: {}",
                    o.name,
                    known.join(", ")
                ),
            });
        }
        let bound = Bound {
            name: o.name.clone(),
            min: o.min,
            max: o.max,
        };
        match bounds.iter_mut().find(|b| b.name == o.name) {
            Some(existing) => *existing = bound,
            None => bounds.push(bound),
        }
    }
    for b in bounds {
        let value = stats[&b.name];
        records.push(Record::threshold(b.name, value, b.min, b.max));
    }
    records.push(Record::summary(records));
    Ok(())
}

fn theta_spec(theta: Option<f64>, freq_index: Option<i64>) -> ThetaSpec {
    match (theta, freq_index) {
        (Some(t), None) => ThetaSpec::Radians(t),
        (None, Some(j)) => ThetaSpec::GridIndex(j),
        _ => unreachable!("rejected by validate"),
    }
}

fn require_simulator(model: BuiltModel) -> Result<ProcessModel> {
    match model {
        BuiltModel::Simulator(m) => Ok(m),
        BuiltModel::Observed(_) => Err(Error::InvalidParameter {
            name: "model",
            reason: "this experiment needs a generative model, not path-file".into(),
        }),
    }
}

fn require_linear(model: &ProcessModel) -> Result<&LinearModel> {
    match model {
        ProcessModel::Linear(m) => Ok(m),
        ProcessModel::DependentError(m) => Ok(m.composed()),
        ProcessModel::Arch(_) => Err(Error::UnsupportedReference {
            wanted: "exact innovation expansion",
            model: "arch",
        }),
    }
}

/// Run the configured experiment and assemble its report. Spectrum configs
/// are directed to [`run_spectrum`] instead.
pub fn run(config: &Config) -> Result<RunOutput> {
    let built = build_model(config)?;
    let mut records;
    match &config.experiment {
        ExperimentConfig::Clt {
            theta,
            freq_index,
            n,
            reps,
            reference,
            u_vectors,
            thresholds,
        } => {
            let model = require_simulator(built)?;
            let cfg = CltConfig {
                model: &model,
                model_id: config.model_id.clone(),
                theta: theta_spec(*theta, *freq_index),
                n: *n,
                reps: *reps,
                test_vectors: build_test_vectors(u_vectors)?,
                reference: reference.to_core(),
                seed: config.seed,
            };
            let rep = run_clt(&cfg)?;
            records = clt_records(&rep);
            apply_bounds(&mut records, clt_bounds(&rep), thresholds)?;
        }
        ExperimentConfig::Theta0 {
            n,
            reps,
            reference,
            u_vectors,
            thresholds,
        } => {
            let model = require_simulator(built)?;
            let cfg = CltConfig {
                model: &model,
                model_id: config.model_id.clone(),
                theta: ThetaSpec::GridIndex(0),
                n: *n,
                reps: *reps,
                test_vectors: build_test_vectors(u_vectors)?,
                reference: reference.to_core(),
                seed: config.seed,
            };
            let rep = run_theta0(&cfg)?;
            records = clt_records(&rep);
            apply_bounds(&mut records, clt_bounds(&rep), thresholds)?;
        }
        ExperimentConfig::CrossFreq {
            freq_index,
            freq_index_prime,
            n,
            reps,
            u_vectors,
            thresholds,
        } => {
            let model = require_simulator(built)?;
            let cfg = CrossFreqConfig {
                model: &model,
                model_id: config.model_id.clone(),
                freq_index: *freq_index,
                freq_index_prime: *freq_index_prime,
                n: *n,
                reps: *reps,
                test_vectors: build_test_vectors(u_vectors)?,
                seed: config.seed,
            };
            let rep = run_cross_freq(&cfg)?;
            records = cross_freq_records(&rep);
            apply_bounds(&mut records, cross_freq_bounds(&rep), thresholds)?;
        }
        ExperimentConfig::Decomposition {
            theta,
            freq_index,
            n_list,
            reps,
            thresholds,
        } => {
            let model = require_simulator(built)?;
            let linear = require_linear(&model)?;
            let n_max = *n_list.last().expect("validated nonempty");
            let (theta, _) = theta_spec(*theta, *freq_index).resolve(n_max)?;

            // One fully reported path per length — the same draw as the
            // first replication of the decay average below.
            let per_n = n_list
                .iter()
                .enumerate()
                .map(|(i, &n)| {
                    let mut rng =
                        RngStream::new(config.seed, i as u64 * *reps as u64 + 1);
                    decomposition_check(linear, theta, n, &mut rng)
                })
                .collect::<Result<Vec<_>>>()?;
            records = decomposition_records(&per_n, &config.model_id, config.seed);

            let points = a2_decay(linear, theta, n_list, *reps, config.seed)?;
            // Strip the duplicate meta record from the decay block.
            records.extend(
                a2_records(&points, &config.model_id, config.seed)
                    .into_iter()
                    .filter(|r| !matches!(r, Record::Meta { .. })),
            );

            let mut defaults: Vec<Bound> = per_n
                .iter()
                .map(|r| Bound::max(format!("residual-rel.{}", r.n), 1e-10))
                .collect();
            if points.len() >= 2 {
                let worst = points
                    .windows(2)
                    .map(|w| {
                        if w[1].mean_ratio == 0.0 {
                            0.0
                        } else {
                            w[1].mean_ratio / w[0].mean_ratio
                        }
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                records.push(Record::scalar("a2-max-adjacent-ratio", worst));
                defaults.push(Bound::max("a2-max-adjacent-ratio", 1.0));
            }
            apply_bounds(&mut records, defaults, thresholds)?;
        }
        ExperimentConfig::A3 {
            t_max,
            reps,
            thresholds,
        } => {
            let model = require_simulator(built)?;
            let rep = a3_sum(&model, *t_max, *reps, config.seed)?;
            records = a3_records(&rep, &config.model_id, config.seed);
            apply_bounds(&mut records, Vec::new(), thresholds)?;
        }
        ExperimentConfig::MApprox {
            m_list,
            reps,
            thresholds,
        } => {
            let model = require_simulator(built)?;
            let rep = m_approx_decay(&model, m_list, *reps, config.seed)?;
            records = m_approx_records(&rep, &config.model_id, config.seed);
            apply_bounds(&mut records, Vec::new(), thresholds)?;
        }
        ExperimentConfig::Spectrum { .. } => {
            return Err(Error::InvalidParameter {
                name: "experiment",
                reason: "spectrum configs are handled by the `spectrum` subcommand".into(),
            });
        }
    }
    let all_passed = records.iter().all(|r| match r {
        Record::Threshold { pass, .. } => *pass,
        _ => true,
    });
    Ok(RunOutput {
        records,
        all_passed,
    })
}

/// Compute the spectral density table requested by a spectrum config.
pub fn run_spectrum(config: &Config) -> Result<SpectralEstimate> {
    let (provenance, grid) = match &config.experiment {
        ExperimentConfig::Spectrum { provenance, grid } => (*provenance, *grid),
        other => {
            return Err(Error::InvalidParameter {
                name: "experiment",
                reason: format!(
                    "the spectrum subcommand needs a spectrum config, got {}",
                    other.kind()
                ),
            });
        }
    };
    let built = build_model(config)?;
    let covariances = |max_lag: usize| -> Result<LagCovariances> {
        match &built {
            BuiltModel::Simulator(m) => LagCovariances::theoretical(m, max_lag),
            BuiltModel::Observed(path) => LagCovariances::empirical(path, max_lag),
        }
    };
    match provenance {
        SpectrumProvenance::ClosedForm => match &built {
            BuiltModel::Simulator(m) => SpectralEstimate::closed_form(m, grid),
            BuiltModel::Observed(_) => Err(Error::UnsupportedReference {
                wanted: "closed-form spectral density",
                model: "path-file",
            }),
        },
        SpectrumProvenance::LagSum { max_lag } => {
            SpectralEstimate::lag_sum(&covariances(max_lag)?, grid)
        }
        SpectrumProvenance::Fejer { max_lag, n } => {
            SpectralEstimate::fejer(&covariances(max_lag)?, n, grid)
        }
        SpectrumProvenance::MonteCarlo { reps, n } => match &built {
            BuiltModel::Simulator(m) => {
                SpectralEstimate::monte_carlo(m, grid, n, reps, config.seed)
            }
            BuiltModel::Observed(_) => Err(Error::UnsupportedReference {
                wanted: "simulated periodogram",
                model: "path-file",
            }),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn white_noise_clt(extra: &str) -> Config {
        parse_config(&format!(
            r#"
seed = 7
model-id = "wn2"

[model.white-noise]
dim = 2

[experiment.clt]
freq-index = 3
n = 32
reps = 200
{extra}
"#
        ))
        .unwrap()
    }

    #[test]
    fn clt_run_emits_thresholds_and_summary() {
        let out = run(&white_noise_clt("")).unwrap();
        let names: Vec<&str> = out
            .records
            .iter()
            .filter_map(|r| match r {
                Record::Threshold { name, .. } => Some(name.as_str()),
                _ => None,
            })
            .collect();
        assert!(names.contains(&"gamma-rel-err"));
        assert!(names.contains(&"relation-rel-norm"));
        assert!(names.contains(&"proj.e1.var-ratio-im"));
        assert!(names.contains(&"proj.rand.ks-re"));
        assert!(matches!(
            out.records.last(),
            Some(Record::Summary { .. })
        ));
        let human = out.human_summary();
        assert!(human.contains("gamma-rel-err"), "{human}");
        assert!(human.lines().last().unwrap().contains("checks"));
    }

    #[test]
    fn overrides_replace_defaults_and_reject_unknown_stats() {
        let cfg = white_noise_clt(
            "[[experiment.clt.thresholds]]\nname = \"gamma-rel-err\"\nmax = 1e-12\n",
        );
        let out = run(&cfg).unwrap();
        assert!(!out.all_passed);
        let gamma_thresholds: Vec<_> = out
            .records
            .iter()
            .filter(|r| matches!(r, Record::Threshold { name, .. } if name == "gamma-rel-err"))
            .collect();
        assert_eq!(gamma_thresholds.len(), 1, "override must replace, not add");

        let cfg = white_noise_clt(
            "[[experiment.clt.thresholds]]\nname = \"no-such-stat\"\nmax = 1.0\n",
        );
        let err = run(&cfg).unwrap_err().to_string();
        assert!(err.contains("no-such-stat"), "{err}");
        assert!(err.contains("gamma-rel-err"), "lists available stats: {err}");
    }

    #[test]
    fn theta0_run_uses_real_mode_defaults() {
        let cfg = parse_config(
            r#"
seed = 11

[model.ma]
coefficients = [[[1.0]], [[0.5]]]

[experiment.theta0]
n = 64
reps = 200
"#,
        )
        .unwrap();
        let out = run(&cfg).unwrap();
        let names: Vec<&str> = out
            .records
            .iter()
            .filter_map(|r| match r {
                Record::Threshold { name, .. } => Some(name.as_str()),
                _ => None,
            })
            .collect();
        assert!(names.contains(&"gamma-rel-err"));
        assert!(!names.contains(&"relation-rel-norm"));
        assert!(names.contains(&"proj.e1.ks-re"));
        assert!(!names.iter().any(|n| n.ends_with("ks-im")));
    }

    #[test]
    fn decomposition_run_reports_per_length_residuals() {
        let cfg = parse_config(
            r#"
seed = 5

[model.ma]
coefficients = [[[1.0]], [[0.4]]]

[experiment.decomposition]
freq-index = 2
n-list = [8, 32]
reps = 50
"#,
        )
        .unwrap();
        let out = run(&cfg).unwrap();
        assert!(out.all_passed, "{}", out.human_summary());
        let names: Vec<&str> = out
            .records
            .iter()
            .filter_map(|r| match r {
                Record::Threshold { name, .. } => Some(name.as_str()),
                _ => None,
            })
            .collect();
        assert_eq!(
            names,
            vec!["residual-rel.8", "residual-rel.32", "a2-max-adjacent-ratio"]
        );
    }

    #[test]
    fn white_noise_decomposition_has_no_conditional_part() {
        let cfg = parse_config(
            r#"
seed = 5

[model.white-noise]
dim = 2

[experiment.decomposition]
theta = 1.0
n-list = [8, 16]
reps = 20
"#,
        )
        .unwrap();
        let out = run(&cfg).unwrap();
        // conditional part is identically zero, so the decay ratio must not
        // report NaN
        assert!(out.all_passed, "{}", out.human_summary());
        let worst = out
            .records
            .iter()
            .find_map(|r| match r {
                Record::Scalar { name, value } if name == "a2-max-adjacent-ratio" => Some(*value),
                _ => None,
            })
            .unwrap();
        assert_eq!(worst, 0.0);
    }

    #[test]
    fn spectrum_config_is_rejected_by_run() {
        let cfg = parse_config(
            r#"
seed = 1

[model.white-noise]
dim = 2

[experiment.spectrum]
grid = 16
provenance = "closed-form"
"#,
        )
        .unwrap();
        let err = run(&cfg).unwrap_err().to_string();
        assert!(err.contains("spectrum"), "{err}");
    }

    #[test]
    fn spectrum_estimates_match_direct_library_calls() {
        let cfg = parse_config(
            r#"
seed = 1

[model.ma]
coefficients = [[[1.0, 0.0], [0.0, 1.0]], [[0.5, 0.2], [0.0, 0.3]]]

[experiment.spectrum]
grid = 16
provenance = "closed-form"
"#,
        )
        .unwrap();
        let est = run_spectrum(&cfg).unwrap();
        assert_eq!(est.len(), 16);
        assert_eq!(est.dim(), 2);

        let model = match build_model(&cfg).unwrap() {
            BuiltModel::Simulator(m) => m,
            _ => unreachable!(),
        };
        let direct = SpectralEstimate::closed_form(&model, 16).unwrap();
        for (a, b) in est.operators().iter().zip(direct.operators()) {
            assert_eq!(a.sub(b).hs_norm(), 0.0);
        }
    }
}
