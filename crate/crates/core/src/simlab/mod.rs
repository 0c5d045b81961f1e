//! Seeded Monte Carlo engine for rejection rates of the six tests.
//!
//! Each replicate draws `G_i ~ Bernoulli(½)`, `M = βG + ε_M` and
//! `Y = 0.2G + γM + ε_Y` with independent standard normal errors, fits both
//! regressions and applies every test. Replicate `r` draws from the ChaCha8
//! stream `r` of the generator seeded by the scenario seed, so counts do not
//! depend on scheduling or thread count.

mod dataset;
pub mod reference;

pub use dataset::{scan_dataset, ScanDatasetSpec};

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linmod::{ols_fit, DesignMatrix, FitSummary, Reference};
use crate::medtests::{run_methods, Method, TestSettings};
use crate::regions::{check_alpha, check_lambda, ps_pvalue, CumulativePair, DEFAULT_LADDER, DEFAULT_LAMBDA};

use reference::{RefRow, RefValue};

pub const DEFAULT_REPLICATES: usize = 20_000;
pub const MIN_REPORTED_REPLICATES: usize = 1_000;
pub const DIRECT_EFFECT: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimScenario {
    pub beta: f64,
    pub gamma: f64,
    pub n: usize,
    pub direct_effect: f64,
    pub replicates: usize,
    pub alpha: f64,
    pub lambda: f64,
    pub seed: u64,
    pub reference: Reference,
    pub ladder: Vec<f64>,
    pub omit_center: bool,
}

impl SimScenario {
    pub fn new(beta: f64, gamma: f64, n: usize, seed: u64) -> Self {
        Self {
            beta,
            gamma,
            n,
            direct_effect: DIRECT_EFFECT,
            replicates: DEFAULT_REPLICATES,
            alpha: 0.05,
            lambda: DEFAULT_LAMBDA,
            seed,
            reference: Reference::StudentT,
            ladder: DEFAULT_LADDER.to_vec(),
            omit_center: true,
        }
    }

    pub fn with_replicates(mut self, replicates: usize) -> Self {
        self.replicates = replicates;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 20 {
            return Err(Error::Config(format!("sample size must be at least 20, got {}", self.n)));
        }
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be positive".into()));
        }
        if ![self.beta, self.gamma, self.direct_effect].iter().all(|v| v.is_finite()) {
            return Err(Error::Config("effects must be finite".into()));
        }
        check_alpha(self.alpha)?;
        check_lambda(self.lambda)?;
        self.settings().validate()
    }

    fn settings(&self) -> TestSettings {
        TestSettings { alphas: vec![self.alpha], lambda: self.lambda, ladder: self.ladder.clone(), omit_center: self.omit_center }
    }

    /// True when either path coefficient is zero.
    pub fn is_null(&self) -> bool {
        self.beta == 0.0 || self.gamma == 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRate {
    pub method: Method,
    pub rejections: u64,
    pub rate: f64,
    pub mc_stderr: f64,
    /// Rate divided by the maxP rate of the same scenario.
    pub relative_efficiency: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimCell {
    pub scenario: SimScenario,
    pub rates: Vec<MethodRate>,
    /// Replicates redrawn because the exposure sample was constant.
    pub redraws: u64,
}

impl SimCell {
    pub fn rate(&self, method: Method) -> Option<&MethodRate> {
        self.rates.iter().find(|r| r.method == method)
    }
}

pub fn mc_stderr(rate: f64, replicates: usize) -> f64 {
    (rate * (1.0 - rate) / replicates as f64).sqrt()
}

/// Both fits of one replicate, plus the number of redraws it needed.
pub fn draw_replicate(s: &SimScenario, index: u64) -> Result<(FitSummary, FitSummary, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    rng.set_stream(index);
    let n = s.n;
    let mut redraws = 0;
    let mut g = vec![0.0; n];
    loop {
        for gi in g.iter_mut() {
            *gi = if rng.random::<bool>() { 1.0 } else { 0.0 };
        }
        let ones = g.iter().filter(|&&x| x == 1.0).count();
        if ones != 0 && ones != n {
            break;
        }
        redraws += 1;
    }
    let mut m = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for &gi in &g {
        let em: f64 = rng.sample(StandardNormal);
        let ey: f64 = rng.sample(StandardNormal);
        let mi = s.beta * gi + em;
        m.push(mi);
        y.push(s.direct_effect * gi + s.gamma * mi + ey);
    }
    let beta = ols_fit(&DesignMatrix::with_intercept(n, &[("G", &g)])?, &m, "G", s.reference)?;
    let gamma = ols_fit(&DesignMatrix::with_intercept(n, &[("G", &g), ("M", &m)])?, &y, "M", s.reference)?;
    Ok((beta, gamma, redraws))
}

fn sum_counts(a: Result<(Vec<u64>, u64)>, b: Result<(Vec<u64>, u64)>) -> Result<(Vec<u64>, u64)> {
    let (mut ca, ra) = a?;
    let (cb, rb) = b?;
    for (x, y) in ca.iter_mut().zip(cb) {
        *x += y;
    }
    Ok((ca, ra + rb))
}

/// Rejection counts of `decide` over all replicates, summed in a fixed order.
fn count_rejections<F>(s: &SimScenario, width: usize, decide: F) -> Result<(Vec<u64>, u64)>
where
    F: Fn(&FitSummary, &FitSummary) -> Result<Vec<bool>> + Sync,
{
    (0..s.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let (b, g, redraws) = draw_replicate(s, r)?;
            let decisions = decide(&b, &g)?;
            Ok((decisions.into_iter().map(u64::from).collect(), redraws))
        })
        .reduce(|| Ok((vec![0; width], 0)), sum_counts)
}

pub fn run_scenario(s: &SimScenario) -> Result<SimCell> {
    s.validate()?;
    let settings = s.settings();
    let (counts, redraws) = count_rejections(s, Method::ALL.len(), |b, g| {
        let reports = run_methods(b, g, &Method::ALL, &settings)?;
        Ok(reports.iter().map(|r| r.reject_at[0].1).collect())
    })?;
    let reps = s.replicates;
    let maxp_rate = counts[1] as f64 / reps as f64;
    let rates = Method::ALL
        .iter()
        .zip(&counts)
        .map(|(&method, &k)| {
            let rate = k as f64 / reps as f64;
            MethodRate {
                method,
                rejections: k,
                rate,
                mc_stderr: mc_stderr(rate, reps),
                relative_efficiency: (maxp_rate > 0.0).then(|| rate / maxp_rate),
            }
        })
        .collect();
    Ok(SimCell { scenario: s.clone(), rates, redraws })
}

/// Which published table a run is compared with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TableKind {
    TypeI,
    Power,
}

impl TableKind {
    pub fn reference_rows(self) -> &'static [RefRow] {
        match self {
            TableKind::TypeI => &reference::TYPE_I,
            TableKind::Power => &reference::POWER,
        }
    }

    pub fn shows_efficiency(self) -> bool {
        self == TableKind::Power
    }

    pub fn methods(self) -> &'static [Method] {
        match self {
            TableKind::TypeI => &Method::ALL,
            TableKind::Power => &[Method::Sobel, Method::Maxp, Method::S, Method::Ps, Method::Asq],
        }
    }

    /// Scenarios of the published table with the given seed and replicate count.
    pub fn scenarios(self, seed: u64, replicates: usize) -> Vec<SimScenario> {
        self.reference_rows()
            .iter()
            .enumerate()
            .map(|(i, r)| {
                SimScenario::new(r.beta, r.gamma, r.n, seed.wrapping_add(i as u64)).with_replicates(replicates)
            })
            .collect()
    }
}

/// Allowance for the three-decimal rounding of published values.
pub const ROUNDING_ALLOWANCE: f64 = 0.0005;

/// Comparison of one simulated rate with a published value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellCheck {
    pub row: usize,
    pub method: Method,
    pub simulated: f64,
    pub published: RefValue,
    pub tolerance: f64,
    pub within: bool,
}

/// Tolerance `k` standard errors at the published value plus rounding.
pub fn check_rate(simulated: f64, published: RefValue, replicates: usize, k: f64) -> Option<(f64, bool)> {
    match published {
        RefValue::Value(p) => {
            let tol = k * mc_stderr(p, replicates) + ROUNDING_ALLOWANCE;
            Some((tol, (simulated - p).abs() <= tol))
        }
        RefValue::Below(b) => {
            let tol = k * mc_stderr(b, replicates);
            Some((tol, simulated < b + tol))
        }
        RefValue::Absent => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableOutput {
    pub cells: Vec<SimCell>,
    pub text: String,
    pub csv: String,
    /// Comparisons with the published table, if one was supplied.
    pub checks: Vec<CellCheck>,
}

impl TableOutput {
    pub fn flagged(&self) -> impl Iterator<Item = &CellCheck> {
        self.checks.iter().filter(|c| !c.within)
    }
}

fn fmt_rate(r: f64) -> String {
    if r < 0.001 && r > 0.0 {
        "<0.001".into()
    } else {
        format!("{r:.3}")
    }
}

/// Run every row and render aligned text and CSV for `methods`; compare with `published` rows when given.
///
/// With `show_efficiency`, each method other than maxP also gets its power relative to maxP.
pub fn run_table(
    rows: &[SimScenario],
    methods: &[Method],
    show_efficiency: bool,
    published: Option<&[RefRow]>,
) -> Result<TableOutput> {
    if let Some(p) = published {
        if p.len() != rows.len() {
            return Err(Error::Config(format!("{} reference rows for {} scenarios", p.len(), rows.len())));
        }
    }
    let mut cells = Vec::with_capacity(rows.len());
    for s in rows {
        if s.replicates < MIN_REPORTED_REPLICATES {
            return Err(Error::Config(format!(
                "table cells need at least {MIN_REPORTED_REPLICATES} replicates, got {}",
                s.replicates
            )));
        }
        cells.push(run_scenario(s)?);
    }
    let re_methods: Vec<Method> = methods.iter().copied().filter(|&m| m != Method::Maxp).collect();
    let show_re = show_efficiency;

    let mut csv = String::from("beta,gamma,n,replicates,seed,method,rejections,rate,mc_stderr,relative_efficiency,published,within_tolerance\n");
    let mut text = String::new();
    let _ = write!(text, "{:>5} {:>5} {:>5}", "beta", "gamma", "n");
    for m in methods {
        let _ = write!(text, " {:>14}", m.name());
    }
    if show_re {
        for m in &re_methods {
            let _ = write!(text, " {:>10}", format!("re:{}", m.name()));
        }
    }
    text.push('\n');

    let mut checks = Vec::new();
    if rows.is_empty() {
        return Ok(TableOutput { cells, text: String::new(), csv: String::new(), checks });
    }
    for (i, cell) in cells.iter().enumerate() {
        let s = &cell.scenario;
        let _ = write!(text, "{:>5} {:>5} {:>5}", s.beta, s.gamma, s.n);
        for &m in methods {
            let r = cell.rate(m).expect("all methods simulated");
            let check = published.and_then(|p| check_rate(r.rate, p[i].rate(m), s.replicates, 3.0).map(|c| (p[i].rate(m), c)));
            let mark = match check {
                Some((_, (_, false))) => "*",
                _ => "",
            };
            let _ = write!(text, " {:>14}", format!("{}{mark}", fmt_rate(r.rate)));
            let (pub_txt, within_txt) = match check {
                Some((RefValue::Value(v), (_, ok))) => (format!("{v}"), ok.to_string()),
                Some((RefValue::Below(v), (_, ok))) => (format!("<{v}"), ok.to_string()),
                _ => (String::new(), String::new()),
            };
            let re = r.relative_efficiency.filter(|_| show_re).map(|x| format!("{x:.6}")).unwrap_or_default();
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{},{:.6},{:.6},{},{},{}",
                s.beta, s.gamma, s.n, s.replicates, s.seed, m.name(), r.rejections, r.rate, r.mc_stderr, re, pub_txt, within_txt
            );
            if let Some((published, (tolerance, within))) = check {
                checks.push(CellCheck { row: i, method: m, simulated: r.rate, published, tolerance, within });
            }
        }
        if show_re {
            for &m in &re_methods {
                let re = cell.rate(m).and_then(|r| r.relative_efficiency);
                let _ = write!(text, " {:>10}", re.map_or("n/a".to_string(), |x| format!("{x:.2}")));
            }
        }
        text.push('\n');
    }
    if published.is_some() {
        let bad = checks.iter().filter(|c| !c.within).count();
        let _ = writeln!(text, "cells outside 3 MC standard errors (marked *): {bad} of {}", checks.len());
    }
    Ok(TableOutput { cells, text, csv, checks })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub scenario: usize,
    pub beta: f64,
    pub gamma: f64,
    pub n: usize,
    pub rate: f64,
    pub mc_stderr: f64,
    /// True when the rate is a type I error (a path coefficient is zero).
    pub type_i: bool,
}

/// PS rejection rates across band lengths, reusing each replicate for every λ.
pub fn band_sweep(lambdas: &[f64], scenarios: &[SimScenario]) -> Result<Vec<SweepRow>> {
    for &l in lambdas {
        check_lambda(l)?;
    }
    let mut rows = Vec::new();
    for (i, s) in scenarios.iter().enumerate() {
        s.validate()?;
        let (counts, _) = count_rejections(s, lambdas.len(), |b, g| {
            let pair = CumulativePair::new(b.u, g.u)?;
            lambdas.iter().map(|&l| Ok(ps_pvalue(pair, l)? <= s.alpha)).collect()
        })?;
        for (&lambda, &k) in lambdas.iter().zip(&counts) {
            let rate = k as f64 / s.replicates as f64;
            rows.push(SweepRow {
                lambda,
                scenario: i,
                beta: s.beta,
                gamma: s.gamma,
                n: s.n,
                rate,
                mc_stderr: mc_stderr(rate, s.replicates),
                type_i: s.is_null(),
            });
        }
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("lambda,scenario,beta,gamma,n,kind,rate,mc_stderr\n");
    for r in rows {
        let kind = if r.type_i { "type-i-error" } else { "power" };
        let _ = writeln!(out, "{},{},{},{},{},{kind},{:.6},{:.6}", r.lambda, r.scenario, r.beta, r.gamma, r.n, r.rate, r.mc_stderr);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replicate_is_deterministic() {
        let s = SimScenario::new(0.1, 0.2, 50, 7);
        assert_eq!(draw_replicate(&s, 3).unwrap(), draw_replicate(&s, 3).unwrap());
        assert_ne!(draw_replicate(&s, 3).unwrap().0, draw_replicate(&s, 4).unwrap().0);
    }

    #[test]
    fn small_scenarios_are_rejected() {
        assert!(SimScenario::new(0.0, 0.0, 10, 1).validate().is_err());
        assert!(SimScenario::new(0.0, 0.0, 100, 1).with_replicates(0).validate().is_err());
    }

    #[test]
    fn empty_table_is_empty() {
        let out = run_table(&[], &Method::ALL, false, None).unwrap();
        assert!(out.cells.is_empty() && out.csv.is_empty() && out.text.is_empty());
    }

    #[test]
    fn rate_checks() {
        let (tol, ok) = check_rate(0.027, RefValue::Value(0.026), 20_000, 3.0).unwrap();
        assert!(ok && tol > 0.003);
        assert!(check_rate(0.0005, RefValue::Below(0.001), 20_000, 3.0).unwrap().1);
        assert!(!check_rate(0.004, RefValue::Below(0.001), 20_000, 3.0).unwrap().1);
        assert!(check_rate(0.5, RefValue::Absent, 20_000, 3.0).is_none());
    }
}
