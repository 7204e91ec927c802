//! Experiment-report serialization.
//!
//! Three formats live here. Diagnostic reports are line-oriented JSON
//! (one self-describing record per line, `record` field as the tag), which
//! diff cleanly and are byte-stable for a fixed configuration: map keys are
//! ordered, floats use the shortest round-trip encoding, and records are
//! emitted in a fixed order. Spectral density operators additionally get a
//! fixed-precision CSV table (17 significant digits, enough to reconstruct
//! every `f64` exactly) with a trailing trace block. Sample paths can be read
//! from (and written to) a plain whitespace matrix, rows indexed by time.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{FunctionVector, LinOperator};
use crate::martingale::{A2Point, A3Report, DecompositionReport, MApproxReport};
use crate::models::SamplePath;
use crate::montecarlo::{CltReport, CrossFreqReport, ProjectionStats};
use crate::spectral::SpectralEstimate;

/// One line of a diagnostic report.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "record", rename_all = "kebab-case", rename_all_fields = "kebab-case")]
pub enum Record {
    /// Identifies the experiment; always the first record of a report.
    Meta {
        experiment: String,
        model_id: String,
        seed: u64,
        params: BTreeMap<String, String>,
    },
    Scalar {
        name: String,
        value: f64,
    },
    Series {
        name: String,
        index: Vec<f64>,
        values: Vec<f64>,
    },
    Operator {
        name: String,
        op: LinOperator,
    },
    /// A checked statistic; `pass` is `value >= min && value <= max` over
    /// whichever bounds are present (any comparison with NaN fails).
    Threshold {
        name: String,
        value: f64,
        min: Option<f64>,
        max: Option<f64>,
        pass: bool,
    },
    /// Always the last record: outcome of all threshold checks.
    Summary {
        pass: bool,
        checks: usize,
        failures: usize,
    },
}

impl Record {
    pub fn scalar(name: impl Into<String>, value: f64) -> Record {
        Record::Scalar {
            name: name.into(),
            value,
        }
    }

    pub fn threshold(
        name: impl Into<String>,
        value: f64,
        min: Option<f64>,
        max: Option<f64>,
    ) -> Record {
        let above = min.map_or(true, |m| value >= m);
        let below = max.map_or(true, |m| value <= m);
        Record::Threshold {
            name: name.into(),
            value,
            min,
            max,
            pass: above && below,
        }
    }

    /// Build the trailing summary from the thresholds already collected.
    pub fn summary(records: &[Record]) -> Record {
        let mut checks = 0;
        let mut failures = 0;
        for r in records {
            if let Record::Threshold { pass, .. } = r {
                checks += 1;
                if !pass {
                    failures += 1;
                }
            }
        }
        Record::Summary {
            pass: failures == 0,
            checks,
            failures,
        }
    }
}

/// Serialize records as JSON lines. Infallible for the types above
/// (non-finite floats become `null`).
pub fn records_to_jsonl(records: &[Record]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serialization is infallible"));
        out.push('\n');
    }
    out
}

/// Write a JSONL report to disk.
pub fn write_records(path: &Path, records: &[Record]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(records_to_jsonl(records).as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

fn push_projection_records(out: &mut Vec<Record>, p: &ProjectionStats) {
    let base = format!("proj.{}", p.label);
    out.push(Record::scalar(format!("{base}.ref-variance"), p.ref_variance));
    out.push(Record::scalar(format!("{base}.mean-re"), p.mean_re));
    out.push(Record::scalar(format!("{base}.mean-im"), p.mean_im));
    out.push(Record::scalar(format!("{base}.var-re"), p.var_re));
    out.push(Record::scalar(format!("{base}.var-im"), p.var_im));
    if let Some(r) = p.var_ratio_re {
        out.push(Record::scalar(format!("{base}.var-ratio-re"), r));
    }
    if let Some(r) = p.var_ratio_im {
        out.push(Record::scalar(format!("{base}.var-ratio-im"), r));
    }
    out.push(Record::scalar(format!("{base}.corr-re-im"), p.corr_re_im));
    if let Some(d) = &p.diag_re {
        out.push(Record::scalar(format!("{base}.std-mean-re"), d.standardized_mean));
        out.push(Record::scalar(format!("{base}.skew-re"), d.skewness));
        out.push(Record::scalar(format!("{base}.exkurt-re"), d.excess_kurtosis));
        out.push(Record::scalar(format!("{base}.ks-re"), d.ks_distance));
    }
    if let Some(d) = &p.diag_im {
        out.push(Record::scalar(format!("{base}.std-mean-im"), d.standardized_mean));
        out.push(Record::scalar(format!("{base}.skew-im"), d.skewness));
        out.push(Record::scalar(format!("{base}.exkurt-im"), d.excess_kurtosis));
        out.push(Record::scalar(format!("{base}.ks-im"), d.ks_distance));
    }
}

/// Records of a CLT experiment report, metadata first.
pub fn clt_records(rep: &CltReport) -> Vec<Record> {
    let mut params = BTreeMap::new();
    params.insert("n".into(), rep.n.to_string());
    params.insert("reps".into(), rep.reps.to_string());
    params.insert("theta".into(), rep.theta.to_string());
    if let Some(j) = rep.freq_index {
        params.insert("freq-index".into(), j.to_string());
    }
    params.insert("mode".into(), rep.mode.label().to_string());
    params.insert("mode-switched".into(), rep.mode_switched.to_string());
    params.insert("model-kind".into(), rep.model_kind.clone());
    params.insert("reference".into(), rep.reference_provenance.clone());
    let mut out = vec![Record::Meta {
        experiment: rep.experiment.clone(),
        model_id: rep.model_id.clone(),
        seed: rep.seed,
        params,
    }];
    out.push(Record::Operator {
        name: "reference".into(),
        op: rep.reference.clone(),
    });
    out.push(Record::Operator {
        name: "gamma-hat".into(),
        op: rep.gamma_hat.clone(),
    });
    out.push(Record::Operator {
        name: "relation-hat".into(),
        op: rep.relation_hat.clone(),
    });
    out.push(Record::scalar("gamma-rel-err", rep.gamma_rel_err));
    out.push(Record::scalar("relation-rel-norm", rep.relation_rel_norm));
    out.push(Record::scalar("trace-mean", rep.trace_mean));
    out.push(Record::scalar("trace-se", rep.trace_se));
    out.push(Record::scalar("trace-ref", rep.trace_ref));
    out.push(Record::scalar("trace-rel-err", rep.trace_rel_err));
    for p in &rep.projections {
        push_projection_records(&mut out, p);
    }
    out
}

/// Records of a cross-frequency independence report.
pub fn cross_freq_records(rep: &CrossFreqReport) -> Vec<Record> {
    let mut params = BTreeMap::new();
    params.insert("n".into(), rep.n.to_string());
    params.insert("reps".into(), rep.reps.to_string());
    params.insert("freq-index".into(), rep.freq_index.to_string());
    params.insert("freq-index-prime".into(), rep.freq_index_prime.to_string());
    params.insert("theta".into(), rep.theta.to_string());
    params.insert("theta-prime".into(), rep.theta_prime.to_string());
    params.insert("model-kind".into(), rep.model_kind.clone());
    let mut out = vec![Record::Meta {
        experiment: "cross-freq".into(),
        model_id: rep.model_id.clone(),
        seed: rep.seed,
        params,
    }];
    out.push(Record::Operator {
        name: "gamma-theta".into(),
        op: rep.gamma_theta.clone(),
    });
    out.push(Record::Operator {
        name: "gamma-theta-prime".into(),
        op: rep.gamma_theta_prime.clone(),
    });
    out.push(Record::Operator {
        name: "cross-cov".into(),
        op: rep.cross_cov.clone(),
    });
    out.push(Record::scalar("normalized-cross-hs", rep.normalized_cross_hs));
    for p in &rep.projections {
        out.push(Record::scalar(
            format!("proj.{}.cross-corr", p.label),
            p.cross_corr,
        ));
    }
    out
}

/// Records of the (A3) summability diagnostic.
pub fn a3_records(rep: &A3Report, model_id: &str, seed: u64) -> Vec<Record> {
    let mut out = vec![Record::Meta {
        experiment: "a3".into(),
        model_id: model_id.into(),
        seed,
        params: BTreeMap::new(),
    }];
    out.push(Record::Series {
        name: "nu2-terms".into(),
        index: (0..rep.terms.len()).map(|t| t as f64).collect(),
        values: rep.terms.clone(),
    });
    out.push(Record::scalar("partial-sum", rep.partial_sum));
    if let Some(s) = rep.fitted_log_slope {
        out.push(Record::scalar("fitted-log-slope", s));
    }
    out
}

/// Records of the per-path decomposition checks (one report per length).
pub fn decomposition_records(
    reps: &[DecompositionReport],
    model_id: &str,
    seed: u64,
) -> Vec<Record> {
    let mut out = vec![Record::Meta {
        experiment: "decomposition".into(),
        model_id: model_id.into(),
        seed,
        params: BTreeMap::new(),
    }];
    let index: Vec<f64> = reps.iter().map(|r| r.n as f64).collect();
    out.push(Record::Series {
        name: "residual-rel".into(),
        index: index.clone(),
        values: reps.iter().map(|r| r.residual_rel).collect(),
    });
    out.push(Record::Series {
        name: "conditional-ratio".into(),
        index: index.clone(),
        values: reps.iter().map(|r| r.conditional_ratio).collect(),
    });
    out.push(Record::Series {
        name: "dft-norm".into(),
        index,
        values: reps.iter().map(|r| r.dft_norm).collect(),
    });
    out
}

/// Records of the (A2) decay diagnostic.
pub fn a2_records(points: &[A2Point], model_id: &str, seed: u64) -> Vec<Record> {
    let mut out = vec![Record::Meta {
        experiment: "a2-decay".into(),
        model_id: model_id.into(),
        seed,
        params: BTreeMap::new(),
    }];
    let index: Vec<f64> = points.iter().map(|p| p.n as f64).collect();
    out.push(Record::Series {
        name: "mean-ratio".into(),
        index: index.clone(),
        values: points.iter().map(|p| p.mean_ratio).collect(),
    });
    out.push(Record::Series {
        name: "envelope".into(),
        index,
        values: points.iter().map(|p| p.envelope).collect(),
    });
    out
}

/// Records of the m-approximability decay diagnostic.
pub fn m_approx_records(rep: &MApproxReport, model_id: &str, seed: u64) -> Vec<Record> {
    let mut out = vec![Record::Meta {
        experiment: "m-approx".into(),
        model_id: model_id.into(),
        seed,
        params: BTreeMap::new(),
    }];
    out.push(Record::Series {
        name: "nu2".into(),
        index: rep.ms.iter().map(|&m| m as f64).collect(),
        values: rep.nu2.clone(),
    });
    if let Some(s) = rep.fitted_log_slope {
        out.push(Record::scalar("fitted-log-slope", s));
    }
    out
}

pub const SPECTRUM_HEADER: &str = "theta,row,col,re,im";

/// One parsed line of a spectrum table. Entry rows carry operator indices;
/// the trace block uses `row = col = -1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumRow {
    pub theta: f64,
    pub row: i64,
    pub col: i64,
    pub re: f64,
    pub im: f64,
}

/// Render a spectral estimate as a CSV table: a header, one row per operator
/// entry per frequency, then one trace row per frequency. All floats are
/// printed with 17 significant digits and parse back to the same bits.
pub fn spectrum_table_string(est: &SpectralEstimate) -> String {
    let mut out = String::with_capacity(64 * est.len() * est.dim() * est.dim());
    out.push_str(SPECTRUM_HEADER);
    out.push('\n');
    for (theta, op) in est.frequencies().iter().zip(est.operators()) {
        for row in 0..op.dim() {
            for col in 0..op.dim() {
                let z = op.entry(row, col);
                out.push_str(&format!(
                    "{theta:.16e},{row},{col},{:.16e},{:.16e}\n",
                    z.re, z.im
                ));
            }
        }
    }
    for (theta, op) in est.frequencies().iter().zip(est.operators()) {
        let t = op.trace();
        out.push_str(&format!("{theta:.16e},-1,-1,{:.16e},{:.16e}\n", t.re, t.im));
    }
    out
}

/// Write the spectrum table to disk.
pub fn write_spectrum_table(path: &Path, est: &SpectralEstimate) -> Result<()> {
    std::fs::write(path, spectrum_table_string(est)).map_err(|e| Error::io(path, e))
}

/// Parse a spectrum table produced by [`spectrum_table_string`].
pub fn parse_spectrum_table(text: &str) -> Result<Vec<SpectrumRow>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, header)) if header.trim() == SPECTRUM_HEADER => {}
        other => {
            return Err(Error::Parse(format!(
                "spectrum table must start with `{SPECTRUM_HEADER}`, got {:?}",
                other.map(|(_, l)| l)
            )))
        }
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines {
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != 5 {
            return Err(Error::Parse(format!(
                "line {}: expected 5 comma-separated fields, got {}",
                lineno + 1,
                fields.len()
            )));
        }
        let parse_f = |s: &str, what: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("line {}: bad {what} `{s}`: {e}", lineno + 1)))
        };
        let parse_i = |s: &str, what: &str| -> Result<i64> {
            s.trim()
                .parse::<i64>()
                .map_err(|e| Error::Parse(format!("line {}: bad {what} `{s}`: {e}", lineno + 1)))
        };
        rows.push(SpectrumRow {
            theta: parse_f(fields[0], "theta")?,
            row: parse_i(fields[1], "row index")?,
            col: parse_i(fields[2], "col index")?,
            re: parse_f(fields[3], "real part")?,
            im: parse_f(fields[4], "imaginary part")?,
        });
    }
    Ok(rows)
}

/// Read a spectrum table from disk.
pub fn load_spectrum_table(path: &Path) -> Result<Vec<SpectrumRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_spectrum_table(&text)
}

/// Parse a real-valued sample path from a whitespace matrix: one time point
/// per row, one coordinate per column. Blank lines and lines starting with
/// `#` are skipped.
pub fn parse_path_matrix(text: &str) -> Result<SamplePath> {
    let mut observations = Vec::new();
    let mut width: Option<usize> = None;
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let coords: Vec<f64> = trimmed
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map_err(|e| {
                    Error::Parse(format!("line {}: bad value `{tok}`: {e}", lineno + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        match width {
            None => width = Some(coords.len()),
            Some(w) if w != coords.len() => {
                return Err(Error::Parse(format!(
                    "line {}: expected {w} columns, got {}",
                    lineno + 1,
                    coords.len()
                )));
            }
            _ => {}
        }
        observations.push(FunctionVector::from_real(&coords));
    }
    SamplePath::new(observations)
}

/// Read a path matrix from disk.
pub fn load_path_matrix(path: &Path) -> Result<SamplePath> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_path_matrix(&text)
}

/// Render a real path as a whitespace matrix with full 17-digit precision
/// (imaginary parts must be zero; they are not representable in this format).
pub fn path_matrix_string(path: &SamplePath) -> Result<String> {
    let mut out = String::new();
    for x in path.observations() {
        if x.max_abs_imag() != 0.0 {
            return Err(Error::InvalidParameter {
                name: "path",
                reason: "path matrices hold real-valued observations only".into(),
            });
        }
        let row: Vec<String> = (0..x.dim()).map(|i| format!("{:.16e}", x.coeff(i).re)).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    Ok(out)
}
