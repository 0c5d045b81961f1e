//! The six mediation tests behind one report type.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linmod::FitSummary;
use crate::numerics::{norm_sf, product_normal_tail};
use crate::regions::{
    asq_threshold, check_lambda, m, ps_pvalue, s_contains, CumulativePair, RegionSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Sobel,
    Maxp,
    ProductNormal,
    S,
    Ps,
    Asq,
}

impl Method {
    pub const ALL: [Method; 6] = [Method::Sobel, Method::Maxp, Method::ProductNormal, Method::S, Method::Ps, Method::Asq];

    pub fn name(self) -> &'static str {
        match self {
            Method::Sobel => "sobel",
            Method::Maxp => "maxp",
            Method::ProductNormal => "product-normal",
            Method::S => "s",
            Method::Ps => "ps",
            Method::Asq => "asq",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

/// What a test reports beyond its decisions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum Evidence {
    PValue(f64),
    /// Smallest rejecting ladder level; the exact p-value lies below it.
    Threshold(Option<f64>),
    /// The S test is not compatible across levels, so only decisions are given.
    DecisionsOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub method: Method,
    pub statistic: Option<f64>,
    pub evidence: Evidence,
    pub reject_at: Vec<(f64, bool)>,
}

impl TestReport {
    fn from_evidence(method: Method, statistic: Option<f64>, evidence: Evidence, alphas: &[f64]) -> Self {
        let reject_at = alphas
            .iter()
            .map(|&a| {
                let r = match evidence {
                    Evidence::PValue(p) => p <= a,
                    Evidence::Threshold(t) => t.is_some_and(|t| t <= a),
                    Evidence::DecisionsOnly => unreachable!("decision-only reports are built directly"),
                };
                (a, r)
            })
            .collect();
        Self { method, statistic, evidence, reject_at }
    }

    pub fn p_value(&self) -> Option<f64> {
        match self.evidence {
            Evidence::PValue(p) => Some(p),
            _ => None,
        }
    }

    pub fn p_threshold(&self) -> Option<f64> {
        match self.evidence {
            Evidence::Threshold(t) => t,
            _ => None,
        }
    }

    pub fn rejects(&self, alpha: f64) -> Option<bool> {
        self.reject_at.iter().find(|(a, _)| *a == alpha).map(|&(_, r)| r)
    }

    /// Decisions agree with the p-value or threshold wherever one is reported.
    pub fn is_consistent(&self) -> bool {
        self.reject_at.iter().all(|&(a, r)| match self.evidence {
            Evidence::PValue(p) => r == (p <= a),
            Evidence::Threshold(t) => r == t.is_some_and(|t| t <= a),
            Evidence::DecisionsOnly => true,
        })
    }
}

fn check_alphas(alphas: &[f64]) -> Result<()> {
    alphas.iter().try_for_each(|&a| {
        if a > 0.0 && a < 1.0 {
            Ok(())
        } else {
            Err(Error::Config(format!("requested level {a} outside (0, 1)")))
        }
    })
}

fn check_fit(fit: &FitSummary) -> Result<()> {
    if fit.stderr > 0.0 && fit.stderr.is_finite() && fit.estimate.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("fit needs a positive standard error, got {}", fit.stderr)))
    }
}

fn pair_of(beta: &FitSummary, gamma: &FitSummary) -> Result<CumulativePair> {
    CumulativePair::new(beta.u, gamma.u)
}

/// First-order delta-method test of `βγ = 0`.
pub fn sobel(beta: &FitSummary, gamma: &FitSummary, alphas: &[f64]) -> Result<TestReport> {
    check_fit(beta)?;
    check_fit(gamma)?;
    check_alphas(alphas)?;
    let (b, g) = (beta.estimate, gamma.estimate);
    let var = b * b * gamma.stderr * gamma.stderr + g * g * beta.stderr * beta.stderr;
    let z = if var > 0.0 { b * g / var.sqrt() } else { 0.0 };
    let p = (2.0 * norm_sf(z.abs())).min(1.0);
    Ok(TestReport::from_evidence(Method::Sobel, Some(z), Evidence::PValue(p), alphas))
}

/// Joint significance: the larger of the two two-sided p-values.
pub fn maxp_pair(pair: CumulativePair, alphas: &[f64]) -> Result<TestReport> {
    check_alphas(alphas)?;
    let p = (2.0 * m(pair.u).max(m(pair.v))).min(1.0);
    Ok(TestReport::from_evidence(Method::Maxp, None, Evidence::PValue(p), alphas))
}

pub fn maxp(beta: &FitSummary, gamma: &FitSummary, alphas: &[f64]) -> Result<TestReport> {
    maxp_pair(pair_of(beta, gamma)?, alphas)
}

/// Reference `t_β t_γ` against the product of two standard normals.
pub fn product_normal_test(beta: &FitSummary, gamma: &FitSummary, alphas: &[f64]) -> Result<TestReport> {
    check_fit(beta)?;
    check_fit(gamma)?;
    check_alphas(alphas)?;
    let w = beta.tstat * gamma.tstat;
    let p = product_normal_tail(w.abs())?;
    Ok(TestReport::from_evidence(Method::ProductNormal, Some(w), Evidence::PValue(p), alphas))
}

pub fn s_test(pair: CumulativePair, alphas: &[f64]) -> Result<TestReport> {
    let reject_at = alphas
        .iter()
        .map(|&a| s_contains(pair, a).map(|r| (a, r)))
        .collect::<Result<_>>()?;
    Ok(TestReport { method: Method::S, statistic: None, evidence: Evidence::DecisionsOnly, reject_at })
}

pub fn ps_test(pair: CumulativePair, lambda: f64, alphas: &[f64]) -> Result<TestReport> {
    check_alphas(alphas)?;
    let p = ps_pvalue(pair, lambda)?;
    Ok(TestReport::from_evidence(Method::Ps, None, Evidence::PValue(p), alphas))
}

pub fn asq_test(pair: CumulativePair, spec: &RegionSpec, alphas: &[f64]) -> Result<TestReport> {
    check_alphas(alphas)?;
    let t = asq_threshold(pair, spec)?;
    Ok(TestReport::from_evidence(Method::Asq, None, Evidence::Threshold(t), alphas))
}

/// Settings shared by the region-based tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSettings {
    pub alphas: Vec<f64>,
    pub lambda: f64,
    pub ladder: Vec<f64>,
    pub omit_center: bool,
}

impl Default for TestSettings {
    fn default() -> Self {
        Self {
            alphas: vec![0.05],
            lambda: crate::regions::DEFAULT_LAMBDA,
            ladder: crate::regions::DEFAULT_LADDER.to_vec(),
            omit_center: true,
        }
    }
}

impl TestSettings {
    pub fn validate(&self) -> Result<()> {
        check_alphas(&self.alphas)?;
        check_lambda(self.lambda)?;
        crate::regions::validate_ladder(&self.ladder, self.lambda)
    }

    pub fn asq_spec(&self) -> RegionSpec {
        let alpha = self.ladder.iter().copied().fold(0.0, f64::max);
        RegionSpec::asq(alpha, self.lambda, &self.ladder, self.omit_center)
    }
}

/// Run the requested methods on one pair of fits.
pub fn run_methods(
    beta: &FitSummary,
    gamma: &FitSummary,
    methods: &[Method],
    settings: &TestSettings,
) -> Result<Vec<TestReport>> {
    let pair = pair_of(beta, gamma)?;
    let spec = settings.asq_spec();
    methods
        .iter()
        .map(|&method| match method {
            Method::Sobel => sobel(beta, gamma, &settings.alphas),
            Method::Maxp => maxp_pair(pair, &settings.alphas),
            Method::ProductNormal => product_normal_test(beta, gamma, &settings.alphas),
            Method::S => s_test(pair, &settings.alphas),
            Method::Ps => ps_test(pair, settings.lambda, &settings.alphas),
            Method::Asq => asq_test(pair, &spec, &settings.alphas),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linmod::Reference;

    fn fit(estimate: f64, stderr: f64) -> FitSummary {
        FitSummary::from_estimate(estimate, stderr, 100, Reference::StandardNormal).unwrap()
    }

    #[test]
    fn sobel_examples() {
        let r = sobel(&fit(1.0, 1.0), &fit(0.0, 1.0), &[0.05]).unwrap();
        assert_eq!(r.statistic, Some(0.0));
        assert_eq!(r.p_value(), Some(1.0));
        let r = sobel(&fit(0.2, 0.05), &fit(0.3, 0.1), &[0.05]).unwrap();
        assert!((r.statistic.unwrap() - 2.4).abs() < 1e-12);
        // 2 * (1 - Phi(2.4)) to 16 digits.
        assert!((r.p_value().unwrap() - 0.016_395_071_849_192_26).abs() < 1e-15);
        assert_eq!(r.rejects(0.05), Some(true));
    }

    #[test]
    fn maxp_examples() {
        let half = CumulativePair::new(0.5, 0.5).unwrap();
        assert_eq!(maxp_pair(half, &[0.05]).unwrap().p_value(), Some(1.0));
        let r = maxp_pair(CumulativePair::new(0.01, 0.99).unwrap(), &[0.05]).unwrap();
        assert!((r.p_value().unwrap() - 0.02).abs() < 1e-15);
    }

    #[test]
    fn product_normal_zero_statistic() {
        let r = product_normal_test(&fit(0.0, 1.0), &fit(3.0, 1.0), &[0.05]).unwrap();
        assert_eq!(r.p_value(), Some(1.0));
    }

    #[test]
    fn s_test_reports_decisions_only() {
        let r = s_test(CumulativePair::new(0.5, 0.5).unwrap(), &[0.05, 0.1]).unwrap();
        assert_eq!(r.evidence, Evidence::DecisionsOnly);
        assert_eq!(r.reject_at, vec![(0.05, true), (0.1, true)]);
    }

    #[test]
    fn asq_none_rejects_nothing() {
        let spec = RegionSpec::asq_default(0.1);
        let r = asq_test(CumulativePair::new(0.5, 0.5).unwrap(), &spec, &[0.05, 0.1]).unwrap();
        assert_eq!(r.evidence, Evidence::Threshold(None));
        assert!(r.reject_at.iter().all(|(_, x)| !x));
        assert!(r.is_consistent());
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("bogus".parse::<Method>().is_err());
    }
}
