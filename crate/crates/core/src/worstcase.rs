//! Type I error of the PS test under a single null (`γ = 0`, `β ≠ 0`).
//!
//! With `U_γ` uniform, the rejection probability is `∫₀¹ g(x) dP(x)`, where
//! `g` is the `u`-slice profile of the effective PS region and `P` is the CDF
//! of `U_β = F₀(T_β)` for a noncentral `T_β`. The profile is exactly
//! piecewise linear, so each piece integrates by parts against `P` and only
//! sloped pieces need quadrature.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{integrate_with, DistributionKind, QuadOptions};
use crate::regions::{check_alpha, check_lambda, profile, Profile, Shape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// `T_β` noncentral t with 5 degrees of freedom.
    T5,
    /// `T_β ~ N(δ, 1)`.
    Normal,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::T5 => "t5",
            Scenario::Normal => "normal",
        }
    }

    fn null_law(self) -> DistributionKind {
        match self {
            Scenario::T5 => DistributionKind::StudentT { df: 5 },
            Scenario::Normal => DistributionKind::StandardNormal,
        }
    }

    fn alt_law(self, delta: f64) -> DistributionKind {
        match self {
            Scenario::T5 => DistributionKind::NoncentralT { df: 5, delta },
            Scenario::Normal => DistributionKind::NoncentralNormal { delta },
        }
    }
}

impl FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "t5" => Ok(Scenario::T5),
            "normal" => Ok(Scenario::Normal),
            other => Err(Error::Config(format!("unknown scenario `{other}`, expected t5 or normal"))),
        }
    }
}

/// Clamp applied to `x` before quantile evaluation in [`u_density`].
pub const DENSITY_CLAMP: f64 = 1e-12;
/// Upper end of the noncentrality search.
pub const DELTA_MAX: f64 = 50.0;

fn check_delta(delta: f64) -> Result<()> {
    if delta.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("noncentrality must be finite, got {delta}")))
    }
}

/// `P(U_β ≤ x)`.
pub fn u_cdf(x: f64, delta: f64, scenario: Scenario) -> Result<f64> {
    check_delta(delta)?;
    if x <= 0.0 {
        return Ok(0.0);
    }
    if x >= 1.0 {
        return Ok(1.0);
    }
    let q = scenario.null_law().quantile(x)?;
    scenario.alt_law(delta).cdf(q)
}

/// Density of `U_β`: `f_δ(q) / f₀(q)` at `q = F₀⁻¹(x)`.
pub fn u_density(x: f64, delta: f64, scenario: Scenario) -> Result<f64> {
    check_delta(delta)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("density argument {x} outside [0, 1]")));
    }
    let x = x.clamp(DENSITY_CLAMP, 1.0 - DENSITY_CLAMP);
    let q = scenario.null_law().quantile(x)?;
    Ok(scenario.alt_law(delta).pdf(q)? / scenario.null_law().pdf(q)?)
}

fn ps_profile(alpha: f64, lambda: f64) -> Result<Profile> {
    check_alpha(alpha)?;
    check_lambda(lambda)?;
    Ok(profile(&Shape::PsEffective { alpha, lambda }))
}

/// `∫ g dP` over a precomputed slice profile.
pub fn type1_from_profile(g: &Profile, delta: f64, scenario: Scenario) -> Result<f64> {
    check_delta(delta)?;
    let mut total = 0.0;
    let mut p_left = None;
    for seg in &g.segments {
        let pa = match p_left {
            Some(p) => p,
            None => u_cdf(seg.a, delta, scenario)?,
        };
        let pb = u_cdf(seg.b, delta, scenario)?;
        total += seg.value_at(seg.b) * pb - seg.value_at(seg.a) * pa;
        if (seg.slope * (seg.b - seg.a)).abs() > 1e-14 {
            let mut failure = None;
            let est = integrate_with(
                |x| {
                    u_cdf(x, delta, scenario).unwrap_or_else(|e| {
                        failure = Some(e);
                        f64::NAN
                    })
                },
                &[seg.a, seg.b],
                QuadOptions::abs(1e-10 / seg.slope.abs().max(1.0)),
            )?;
            if let Some(e) = failure {
                return Err(e);
            }
            total -= seg.slope * est.value;
        }
        p_left = Some(pb);
    }
    Ok(total)
}

/// Rejection probability of the PS test at level `alpha` when `γ = 0` and `T_β` has noncentrality `delta`.
pub fn type1_error(alpha: f64, lambda: f64, delta: f64, scenario: Scenario) -> Result<f64> {
    type1_from_profile(&ps_profile(alpha, lambda)?, delta, scenario)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaWorst {
    pub alpha: f64,
    pub delta: f64,
    pub type1: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseReport {
    pub scenario: Scenario,
    pub lambda: f64,
    pub alpha_grid: Vec<f64>,
    pub delta_grid: Vec<f64>,
    pub per_alpha: Vec<AlphaWorst>,
    pub global_max: AlphaWorst,
}

impl WorstCaseReport {
    /// Largest ratio over every evaluated cell, refinement included.
    pub fn max_ratio(&self) -> f64 {
        self.global_max.ratio
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("scenario,lambda,alpha,worst_delta,max_type1,ratio\n");
        for r in &self.per_alpha {
            let _ = writeln!(
                out,
                "{},{},{},{:.6},{:.10},{:.8}",
                self.scenario.name(),
                self.lambda,
                r.alpha,
                r.delta,
                r.type1,
                r.ratio
            );
        }
        out
    }
}

/// `0.001, 0.002, …, 0.05` then `0.055, …, 0.2`.
pub fn default_alpha_grid() -> Vec<f64> {
    let fine = (1..=50).map(|i| i as f64 / 1000.0);
    let coarse = (11..=40).map(|i| i as f64 * 0.005);
    fine.chain(coarse).collect()
}

/// Step 0.25 on `[0, 8]`, step 2 on `[8, 50]`.
pub fn default_delta_grid() -> Vec<f64> {
    let fine = (0..=32).map(|i| i as f64 * 0.25);
    let coarse = (5..=25).map(|i| i as f64 * 2.0);
    fine.chain(coarse).collect()
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section maximization of `f` on `[a, b]`.
fn golden_max<F: FnMut(f64) -> Result<f64>>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> Result<(f64, f64)> {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > xtol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc >= fd { (c, fc) } else { (d, fd) })
}

fn worst_for_alpha(alpha: f64, lambda: f64, deltas: &[f64], scenario: Scenario) -> Result<AlphaWorst> {
    let g = ps_profile(alpha, lambda)?;
    let values = deltas.iter().map(|&d| type1_from_profile(&g, d, scenario)).collect::<Result<Vec<_>>>()?;
    let (i, &v) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty delta grid");
    let mut best = (deltas[i], v);
    let lo = deltas[i.saturating_sub(1)];
    let hi = deltas[(i + 1).min(deltas.len() - 1)];
    if hi > lo {
        let refined = golden_max(|d| type1_from_profile(&g, d, scenario), lo, hi, 1e-4)?;
        if refined.1 > best.1 {
            best = refined;
        }
    }
    Ok(AlphaWorst { alpha, delta: best.0, type1: best.1, ratio: best.1 / alpha })
}

/// Maximize the type I error over `δ` for every `α`, then over `α`.
pub fn maximize_inflation(
    scenario: Scenario,
    lambda: f64,
    alpha_grid: &[f64],
    delta_grid: &[f64],
) -> Result<WorstCaseReport> {
    if alpha_grid.is_empty() || delta_grid.is_empty() {
        return Err(Error::Config("alpha and delta grids must be nonempty".into()));
    }
    check_lambda(lambda)?;
    for &a in alpha_grid {
        check_alpha(a)?;
    }
    for &d in delta_grid {
        check_delta(d)?;
    }
    let mut deltas = delta_grid.to_vec();
    deltas.sort_by(f64::total_cmp);
    deltas.dedup();
    let per_alpha = alpha_grid
        .par_iter()
        .map(|&a| worst_for_alpha(a, lambda, &deltas, scenario))
        .collect::<Result<Vec<_>>>()?;
    let global_max = *per_alpha
        .iter()
        .max_by(|a, b| a.ratio.total_cmp(&b.ratio))
        .expect("nonempty alpha grid");
    Ok(WorstCaseReport { scenario, lambda, alpha_grid: alpha_grid.to_vec(), delta_grid: deltas, per_alpha, global_max })
}
