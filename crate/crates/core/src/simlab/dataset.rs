//! Synthetic tables with known ground truth for exercising the scan.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linmod::DataTable;

/// One binary exposure `G`, covariates `age` and `sex`, one planted mediator
/// `M0` and null mediators `N01, N02, …`.
///
/// `M0 = βG + 0.1·age + ε`, `N_j = β_null·G + ε` and
/// `Y = 0.2G + γ·M0 + 0.1·age + 0.1·sex + ε`, so only `M0` carries an
/// indirect effect. Each mediator entry is missing with probability
/// `missing_fraction`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanDatasetSpec {
    pub n: usize,
    pub planted_beta: f64,
    pub planted_gamma: f64,
    pub null_mediators: usize,
    pub null_beta: f64,
    pub missing_fraction: f64,
    pub seed: u64,
}

impl Default for ScanDatasetSpec {
    fn default() -> Self {
        Self {
            n: 1000,
            planted_beta: 0.4,
            planted_gamma: 0.4,
            null_mediators: 50,
            null_beta: 0.4,
            missing_fraction: 0.01,
            seed: 2024,
        }
    }
}

impl ScanDatasetSpec {
    pub fn null_names(&self) -> Vec<String> {
        let width = self.null_mediators.to_string().len().max(2);
        (1..=self.null_mediators).map(|j| format!("N{j:0width$}")).collect()
    }
}

pub fn scan_dataset(spec: &ScanDatasetSpec) -> Result<DataTable> {
    if spec.n == 0 || !(0.0..1.0).contains(&spec.missing_fraction) {
        return Err(Error::Config("dataset needs n > 0 and a missing fraction in [0, 1)".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n;
    let normal = |rng: &mut ChaCha8Rng| -> f64 { rng.sample(StandardNormal) };
    let g: Vec<f64> = (0..n).map(|_| f64::from(u8::from(rng.random::<bool>()))).collect();
    let age: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
    let sex: Vec<f64> = (0..n).map(|_| f64::from(u8::from(rng.random::<bool>()))).collect();
    let m0: Vec<f64> = (0..n).map(|i| spec.planted_beta * g[i] + 0.1 * age[i] + normal(&mut rng)).collect();
    let y: Vec<f64> = (0..n)
        .map(|i| 0.2 * g[i] + spec.planted_gamma * m0[i] + 0.1 * age[i] + 0.1 * sex[i] + normal(&mut rng))
        .collect();
    let mask = |rng: &mut ChaCha8Rng, v: Vec<f64>| -> Vec<f64> {
        v.into_iter().map(|x| if rng.random::<f64>() < spec.missing_fraction { f64::NAN } else { x }).collect()
    };
    let m0 = mask(&mut rng, m0);
    let mut table = DataTable::from_columns([("Y", y), ("G", g.clone()), ("age", age), ("sex", sex), ("M0", m0)])?;
    for name in spec.null_names() {
        let col: Vec<f64> = g.iter().map(|&gi| spec.null_beta * gi + normal(&mut rng)).collect();
        let col = mask(&mut rng, col);
        table.push_column(name, col)?;
    }
    Ok(table)
}
