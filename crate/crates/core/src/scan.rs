//! Batch mediation scan over every (exposure, mediator) pair of a table.
//!
//! Mediator columns are clamped to detection limits and optionally mapped to
//! normal scores, then each pair is fitted on its own complete cases and run
//! through the requested tests. Records come back sorted by exposure, then
//! mediator, and do not depend on the number of workers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linmod::{mediation_fits, DataTable, MediationFit, Reference};
use crate::medtests::{run_methods, Evidence, Method, TestReport, TestSettings};
use crate::numerics::norm_quantile;

/// Detection limits of one mediator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Limits {
    pub lower: f64,
    pub upper: f64,
}

impl Limits {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if lower.is_finite() && upper.is_finite() && lower < upper {
            Ok(Self { lower, upper })
        } else {
            Err(Error::Config(format!("detection limits need lower < upper, got ({lower}, {upper})")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub input: PathBuf,
    pub delimiter: char,
    pub missing: String,
    pub outcome: String,
    pub exposures: Vec<String>,
    pub mediators: Vec<String>,
    pub covariates: Vec<String>,
    pub limits: BTreeMap<String, Limits>,
    pub inverse_normal: bool,
    /// Normal scores use `(rank − c) / (n + 1 − 2c)`; `c = 0.5` gives `(rank − 0.5) / n`.
    pub rank_offset: f64,
    pub methods: Vec<Method>,
    pub alphas: Vec<f64>,
    pub lambda: f64,
    pub ladder: Vec<f64>,
    pub omit_center: bool,
    pub reference: Reference,
    /// Recorded for reproducibility; the scan itself draws no random numbers.
    pub seed: u64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        let settings = TestSettings::default();
        Self {
            input: PathBuf::new(),
            delimiter: '\t',
            missing: "NA".into(),
            outcome: String::new(),
            exposures: Vec::new(),
            mediators: Vec::new(),
            covariates: Vec::new(),
            limits: BTreeMap::new(),
            inverse_normal: false,
            rank_offset: 0.5,
            methods: Method::ALL.to_vec(),
            alphas: settings.alphas,
            lambda: settings.lambda,
            ladder: settings.ladder,
            omit_center: settings.omit_center,
            reference: Reference::StudentT,
            seed: 0,
        }
    }
}

impl ScanConfig {
    pub fn settings(&self) -> TestSettings {
        TestSettings {
            alphas: self.alphas.clone(),
            lambda: self.lambda,
            ladder: self.ladder.clone(),
            omit_center: self.omit_center,
        }
    }

    /// Checks that need no data.
    pub fn validate(&self) -> Result<()> {
        if self.outcome.is_empty() {
            return Err(Error::Config("outcome column is required".into()));
        }
        if self.exposures.is_empty() || self.mediators.is_empty() {
            return Err(Error::Config("at least one exposure and one mediator are required".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no methods requested".into()));
        }
        let mut seen = BTreeSet::new();
        let names = std::iter::once(&self.outcome).chain(&self.exposures).chain(&self.mediators).chain(&self.covariates);
        for name in names {
            if !seen.insert(name.as_str()) {
                return Err(Error::Config(format!("column `{name}` is configured more than once")));
            }
        }
        for (name, l) in &self.limits {
            if !self.mediators.contains(name) {
                return Err(Error::Config(format!("detection limits given for `{name}`, which is not a mediator")));
            }
            Limits::new(l.lower, l.upper)?;
        }
        if !(0.0..=0.5).contains(&self.rank_offset) {
            return Err(Error::Config(format!("rank offset must lie in [0, 0.5], got {}", self.rank_offset)));
        }
        self.settings().validate()
    }

    /// Config checks plus presence of every named column.
    pub fn validate_against(&self, table: &DataTable) -> Result<()> {
        self.validate()?;
        let names = std::iter::once(&self.outcome).chain(&self.exposures).chain(&self.mediators).chain(&self.covariates);
        for name in names {
            table.column(name)?;
        }
        if table.nrows() == 0 {
            return Err(Error::InsufficientData("input has no data rows".into()));
        }
        Ok(())
    }
}

/// Parse a limits file: `mediator`, `lower`, `upper`, tab-separated, optional header.
pub fn parse_limits(text: &str) -> Result<BTreeMap<String, Limits>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::Parse(format!("limits line {}: expected 3 fields, got {}", i + 1, fields.len())));
        }
        let (lo, hi) = match (fields[1].parse::<f64>(), fields[2].parse::<f64>()) {
            (Ok(lo), Ok(hi)) => (lo, hi),
            _ if i == 0 => continue,
            _ => return Err(Error::Parse(format!("limits line {}: non-numeric limit", i + 1))),
        };
        if out.insert(fields[0].to_string(), Limits::new(lo, hi)?).is_some() {
            return Err(Error::Config(format!("limits for `{}` given twice", fields[0])));
        }
    }
    Ok(out)
}

/// Average ranks (1-based) of the non-missing entries; missing entries get NaN.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).filter(|&i| !values[i].is_nan()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![f64::NAN; values.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && values[idx[end]] == values[idx[start]] {
            end += 1;
        }
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

/// Clamp to detection limits, then optionally map to normal scores. Missing stays missing.
pub fn preprocess(values: &[f64], limits: Option<Limits>, inverse_normal: bool, rank_offset: f64) -> Result<Vec<f64>> {
    let n = values.iter().filter(|v| !v.is_nan()).count();
    if n == 0 {
        return Err(Error::InsufficientData("column has no non-missing values".into()));
    }
    let mut out: Vec<f64> = match limits {
        Some(l) => {
            Limits::new(l.lower, l.upper)?;
            values
                .iter()
                .map(|&x| {
                    if x < l.lower {
                        l.lower / 2.0
                    } else if x > l.upper {
                        l.upper
                    } else {
                        x
                    }
                })
                .collect()
        }
        None => values.to_vec(),
    };
    if inverse_normal {
        let denom = n as f64 + 1.0 - 2.0 * rank_offset;
        out = average_ranks(&out)
            .into_iter()
            .map(|r| if r.is_nan() { r } else { norm_quantile((r - rank_offset) / denom) })
            .collect();
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRecord {
    pub exposure: String,
    pub mediator: String,
    pub fit: Option<MediationFit>,
    pub reports: Vec<TestReport>,
    pub error: Option<String>,
}

impl ScanRecord {
    pub fn report(&self, method: Method) -> Option<&TestReport> {
        self.reports.iter().find(|r| r.method == method)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanSummary {
    pub pairs: usize,
    pub ok: usize,
    pub errors: usize,
    pub rows: usize,
    /// Mediators skipped before fitting, with the reason.
    pub skipped_mediators: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanOutput {
    pub records: Vec<ScanRecord>,
    pub summary: ScanSummary,
}

pub fn load_table(cfg: &ScanConfig) -> Result<DataTable> {
    let text = std::fs::read_to_string(&cfg.input)
        .map_err(|e| Error::Io(format!("{}: {e}", cfg.input.display())))?;
    DataTable::parse_delimited(&text, cfg.delimiter, &cfg.missing)
}

/// Read `cfg.input` and scan it.
pub fn run_scan(cfg: &ScanConfig, workers: Option<usize>) -> Result<ScanOutput> {
    cfg.validate()?;
    let table = load_table(cfg)?;
    scan_table(cfg, &table, workers)
}

/// Scan an in-memory table with at most `workers` threads (all available when `None`).
pub fn scan_table(cfg: &ScanConfig, table: &DataTable, workers: Option<usize>) -> Result<ScanOutput> {
    cfg.validate_against(table)?;
    let mut data = table.clone();
    let mut skipped = BTreeMap::new();
    for name in &cfg.mediators {
        let column = data.column_mut(name)?;
        match preprocess(column, cfg.limits.get(name).copied(), cfg.inverse_normal, cfg.rank_offset) {
            Ok(v) => *column = v,
            Err(e) => {
                log::warn!("skipping mediator `{name}`: {e}");
                skipped.insert(name.clone(), e.to_string());
            }
        }
    }

    let mut exposures = cfg.exposures.clone();
    let mut mediators = cfg.mediators.clone();
    exposures.sort();
    mediators.sort();
    let pairs: Vec<(&str, &str)> = exposures
        .iter()
        .flat_map(|e| mediators.iter().map(move |m| (e.as_str(), m.as_str())))
        .collect();

    let covariates: Vec<&str> = cfg.covariates.iter().map(String::as_str).collect();
    let settings = cfg.settings();
    let run = || -> Vec<ScanRecord> {
        pairs
            .par_iter()
            .map(|&(e, m)| {
                if let Some(reason) = skipped.get(m) {
                    return error_record(e, m, reason.clone());
                }
                scan_pair(&data, cfg, e, m, &covariates, &settings)
                    .unwrap_or_else(|err| error_record(e, m, err.to_string()))
            })
            .collect()
    };
    let records = match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?
            .install(run),
        None => run(),
    };

    let errors = records.iter().filter(|r| r.error.is_some()).count();
    let summary = ScanSummary {
        pairs: records.len(),
        ok: records.len() - errors,
        errors,
        rows: table.nrows(),
        skipped_mediators: skipped.into_iter().collect(),
    };
    Ok(ScanOutput { records, summary })
}

fn error_record(exposure: &str, mediator: &str, error: String) -> ScanRecord {
    ScanRecord { exposure: exposure.into(), mediator: mediator.into(), fit: None, reports: Vec::new(), error: Some(error) }
}

fn scan_pair(
    data: &DataTable,
    cfg: &ScanConfig,
    exposure: &str,
    mediator: &str,
    covariates: &[&str],
    settings: &TestSettings,
) -> Result<ScanRecord> {
    let fit = mediation_fits(data, exposure, mediator, &cfg.outcome, covariates, cfg.reference)?;
    let reports = run_methods(&fit.beta, &fit.gamma, &cfg.methods, settings)?;
    Ok(ScanRecord { exposure: exposure.into(), mediator: mediator.into(), fit: Some(fit), reports, error: None })
}

fn alpha_label(a: f64) -> String {
    format!("{a}")
}

fn evidence_cell(r: Option<&TestReport>) -> String {
    match r.map(|r| r.evidence) {
        Some(Evidence::PValue(p)) => format!("{p:e}"),
        Some(Evidence::Threshold(Some(t))) => format!("<={t}"),
        Some(Evidence::Threshold(None)) => ">max".into(),
        _ => "NA".into(),
    }
}

/// Tab-separated records with a fixed header.
///
/// Columns: `exposure mediator n_complete beta se_beta u_beta gamma se_gamma
/// u_gamma`, then `<method>_p` per method (p-value, `<=t` for an ASQ
/// threshold, `>max` when no ladder level rejects, `NA` for the S test),
/// then `<method>_reject_<alpha>` as 0/1, then `status`.
pub fn records_tsv(records: &[ScanRecord], methods: &[Method], alphas: &[f64]) -> String {
    let mut out = String::from("exposure\tmediator\tn_complete\tbeta\tse_beta\tu_beta\tgamma\tse_gamma\tu_gamma");
    for m in methods {
        let _ = write!(out, "\t{}_p", m.name());
    }
    for m in methods {
        for &a in alphas {
            let _ = write!(out, "\t{}_reject_{}", m.name(), alpha_label(a));
        }
    }
    out.push_str("\tstatus\n");
    for r in records {
        let _ = write!(out, "{}\t{}", r.exposure, r.mediator);
        match &r.fit {
            Some(f) => {
                let _ = write!(
                    out,
                    "\t{}\t{:e}\t{:e}\t{:e}\t{:e}\t{:e}\t{:e}",
                    f.n_complete, f.beta.estimate, f.beta.stderr, f.beta.u, f.gamma.estimate, f.gamma.stderr, f.gamma.u
                );
            }
            None => out.push_str(&"\tNA".repeat(7)),
        }
        for &m in methods {
            let _ = write!(out, "\t{}", evidence_cell(r.report(m)));
        }
        for &m in methods {
            for &a in alphas {
                let cell = match r.report(m).and_then(|rep| rep.rejects(a)) {
                    Some(true) => "1",
                    Some(false) => "0",
                    None => "NA",
                };
                let _ = write!(out, "\t{cell}");
            }
        }
        let status = r.error.as_deref().map_or("ok".to_string(), |e| format!("error: {}", e.replace(['\t', '\n'], " ")));
        let _ = writeln!(out, "\t{status}");
    }
    out
}

/// One point of a QQ plot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QqPoint {
    pub method: Method,
    pub rank: usize,
    pub expected: f64,
    pub observed: f64,
    /// Set for ASQ, whose value is a threshold rather than an exact p-value.
    pub censored: bool,
}

/// Fewest p-values per method for QQ output.
pub const MIN_QQ_POINTS: usize = 10;

/// QQ coordinates `(−log₁₀ expected, −log₁₀ observed)` per method.
///
/// Methods without p-values (the S test) are skipped. ASQ values are their
/// thresholds, or 1 when no ladder level rejects, and are flagged censored.
pub fn qq_data(records: &[ScanRecord], methods: &[Method]) -> Result<Vec<QqPoint>> {
    if records.is_empty() {
        return Err(Error::InsufficientData("no records for QQ data".into()));
    }
    let mut points = Vec::new();
    for &method in methods {
        let mut values: Vec<(f64, bool)> = records
            .iter()
            .filter_map(|r| r.report(method))
            .filter_map(|rep| match rep.evidence {
                Evidence::PValue(p) => Some((p, false)),
                Evidence::Threshold(t) => Some((t.unwrap_or(1.0), true)),
                Evidence::DecisionsOnly => None,
            })
            .collect();
        if values.is_empty() {
            continue;
        }
        if values.len() < MIN_QQ_POINTS {
            return Err(Error::InsufficientData(format!(
                "{} has {} p-values, QQ data needs at least {MIN_QQ_POINTS}",
                method,
                values.len()
            )));
        }
        values.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = values.len() as f64;
        for (i, (p, censored)) in values.into_iter().enumerate() {
            let expected = (i as f64 + 0.5) / n;
            points.push(QqPoint {
                method,
                rank: i + 1,
                expected: -expected.log10(),
                observed: -p.max(f64::MIN_POSITIVE).log10(),
                censored,
            });
        }
    }
    Ok(points)
}

pub fn qq_csv(points: &[QqPoint]) -> String {
    let mut out = String::from("method,rank,expected_neglog10,observed_neglog10,censored\n");
    for p in points {
        let _ = writeln!(out, "{},{},{:.8},{:.8},{}", p.method, p.rank, p.expected, p.observed, p.censored);
    }
    out
}
