//! Ordinary least squares for the two mediation regressions.
//!
//! Fits use a Householder QR factorization of the design. The coefficient of
//! interest is reported with its standard error, t statistic, residual degrees
//! of freedom, and the cumulative probability `u` of the t statistic under the
//! chosen reference law.

mod table;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{norm_cdf, DistributionKind};

pub use table::DataTable;

/// Minimum number of complete rows for a mediation fit.
pub const MIN_COMPLETE_ROWS: usize = 10;

/// Reference law used to turn a t statistic into `u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reference {
    /// Student t with the residual degrees of freedom.
    #[default]
    StudentT,
    StandardNormal,
}

impl Reference {
    pub fn cdf(self, t: f64, df: usize) -> Result<f64> {
        match self {
            Reference::StudentT => DistributionKind::StudentT { df: df as u32 }.cdf(t),
            Reference::StandardNormal => Ok(norm_cdf(t)),
        }
    }
}

impl std::str::FromStr for Reference {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "t" | "student-t" => Ok(Reference::StudentT),
            "normal" | "standard-normal" => Ok(Reference::StandardNormal),
            other => Err(Error::Config(format!("unknown reference `{other}`; expected t or normal"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub estimate: f64,
    pub stderr: f64,
    pub tstat: f64,
    pub df: usize,
    pub u: f64,
}

impl FitSummary {
    /// Build a summary from an estimate and its standard error.
    pub fn from_estimate(estimate: f64, stderr: f64, df: usize, reference: Reference) -> Result<Self> {
        if !(stderr > 0.0 && stderr.is_finite()) {
            return Err(Error::DegenerateFit(format!("standard error must be positive, got {stderr}")));
        }
        let tstat = estimate / stderr;
        let u = reference.cdf(tstat, df)?;
        Ok(Self { estimate, stderr, tstat, df, u })
    }
}

/// Named design matrix. The first column is the intercept when built with [`DesignMatrix::with_intercept`].
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    names: Vec<String>,
    x: DMatrix<f64>,
}

impl DesignMatrix {
    pub fn with_intercept(n: usize, columns: &[(&str, &[f64])]) -> Result<Self> {
        let p = columns.len() + 1;
        let mut names = Vec::with_capacity(p);
        names.push("(intercept)".to_string());
        for (name, values) in columns {
            if values.len() != n {
                return Err(Error::Config(format!("column `{name}` has {} rows, expected {n}", values.len())));
            }
            if names.iter().any(|s| s == name) {
                return Err(Error::Config(format!("column `{name}` appears twice in the design")));
            }
            names.push(name.to_string());
        }
        let x = DMatrix::from_fn(n, p, |i, j| if j == 0 { 1.0 } else { columns[j - 1].1[i] });
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("design values must be finite".into()));
        }
        Ok(Self { names, x })
    }

    pub fn nrows(&self) -> usize {
        self.x.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.x.ncols()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.x
    }

    fn position(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }
}

/// Full OLS solution.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsSolution {
    pub coefficients: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub df: usize,
    pub sigma2: f64,
}

pub fn ols(design: &DesignMatrix, y: &[f64]) -> Result<OlsSolution> {
    let (n, p) = design.x.shape();
    if y.len() != n {
        return Err(Error::Config(format!("response has {} rows, design has {n}", y.len())));
    }
    if n <= p {
        return Err(Error::InsufficientData(format!("{n} rows for {p} columns")));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("response values must be finite".into()));
    }
    let col_norms: Vec<f64> = design.x.column_iter().map(|c| c.norm()).collect();
    let qr = design.x.clone().qr();
    let r = qr.r();
    for j in 0..p {
        if r[(j, j)].abs() <= 1e-10 * col_norms[j].max(f64::MIN_POSITIVE) {
            return Err(Error::SingularDesign(format!("column `{}` is linearly dependent", design.names[j])));
        }
    }
    let mut qty = DVector::from_column_slice(y);
    qr.q_tr_mul(&mut qty);
    let beta = r
        .solve_upper_triangular(&qty.rows(0, p).into_owned())
        .ok_or_else(|| Error::SingularDesign("triangular solve failed".into()))?;
    let rss: f64 = qty.rows(p, n - p).norm_squared();
    let y_norm2: f64 = y.iter().map(|v| v * v).sum();
    if rss <= 1e-24 * y_norm2.max(f64::MIN_POSITIVE) {
        return Err(Error::DegenerateFit("zero residual variance".into()));
    }
    let df = n - p;
    let sigma2 = rss / df as f64;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| Error::SingularDesign("triangular inverse failed".into()))?;
    let stderrs = (0..p).map(|j| (sigma2 * r_inv.row(j).norm_squared()).sqrt()).collect();
    Ok(OlsSolution { coefficients: beta.iter().copied().collect(), stderrs, df, sigma2 })
}

pub fn ols_fit(design: &DesignMatrix, y: &[f64], target: &str, reference: Reference) -> Result<FitSummary> {
    let j = design.position(target)?;
    let sol = ols(design, y)?;
    FitSummary::from_estimate(sol.coefficients[j], sol.stderrs[j], sol.df, reference)
}

/// Both mediation regressions on the complete cases of one (exposure, mediator) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediationFit {
    /// Mediator on exposure (and covariates).
    pub beta: FitSummary,
    /// Outcome on mediator (and exposure and covariates).
    pub gamma: FitSummary,
    pub n_complete: usize,
}

pub fn mediation_fits(
    data: &DataTable,
    exposure: &str,
    mediator: &str,
    outcome: &str,
    covariates: &[&str],
    reference: Reference,
) -> Result<MediationFit> {
    let mut used = vec![exposure, mediator, outcome];
    used.extend_from_slice(covariates);
    for (i, a) in used.iter().enumerate() {
        if used[..i].contains(a) {
            return Err(Error::Config(format!("column `{a}` is used twice")));
        }
    }
    let rows = data.complete_rows(&used)?;
    if rows.len() < MIN_COMPLETE_ROWS {
        return Err(Error::InsufficientData(format!(
            "{} complete rows, need at least {MIN_COMPLETE_ROWS}",
            rows.len()
        )));
    }
    let take = |name: &str| -> Result<Vec<f64>> {
        let col = data.column(name)?;
        Ok(rows.iter().map(|&i| col[i]).collect())
    };
    let g = take(exposure)?;
    let m = take(mediator)?;
    let y = take(outcome)?;
    let covs: Vec<Vec<f64>> = covariates.iter().map(|c| take(c)).collect::<Result<_>>()?;
    let n = rows.len();

    let mut cols: Vec<(&str, &[f64])> = vec![(exposure, &g)];
    cols.extend(covariates.iter().zip(&covs).map(|(name, v)| (*name, v.as_slice())));
    let beta = ols_fit(&DesignMatrix::with_intercept(n, &cols)?, &m, exposure, reference)?;

    cols.insert(1, (mediator, &m));
    let gamma = ols_fit(&DesignMatrix::with_intercept(n, &cols)?, &y, mediator, reference)?;
    Ok(MediationFit { beta, gamma, n_complete: n })
}
