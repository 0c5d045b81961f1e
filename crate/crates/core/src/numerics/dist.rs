//! The five reference distributions used by the tests.
//!
//! Normal and central-t functions are evaluated in closed form through the
//! complementary error function and the regularized incomplete beta function.
//! The noncentral t is computed by quadrature over the scaled chi variable
//! `S = sqrt(X/df)`, `X ~ chi2(df)`, using `T = (Z + delta) / S`. The
//! product-normal law uses `Pr(|Z1 Z2| > c) = 4 * int_0^inf phi(z) Phi(-c/z) dz`.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use libm::erfc;
use statrs::function::erf::erfc_inv;
use statrs::function::gamma::ln_gamma;

use super::quad::{integrate_with, QuadOptions};
use super::roots::invert_monotone;
use crate::error::{domain, Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DistributionKind {
    StandardNormal,
    StudentT { df: u32 },
    NoncentralT { df: u32, delta: f64 },
    /// Normal with mean `delta` and unit variance.
    NoncentralNormal { delta: f64 },
    /// Law of the product of two independent standard normals.
    ProductNormal,
}

impl DistributionKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DistributionKind::StudentT { df } | DistributionKind::NoncentralT { df, .. } if df == 0 => {
                domain("degrees of freedom must be at least 1")
            }
            DistributionKind::NoncentralT { delta, .. } | DistributionKind::NoncentralNormal { delta }
                if !delta.is_finite() =>
            {
                domain("noncentrality must be finite")
            }
            _ => Ok(()),
        }
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        self.validate()?;
        if !x.is_finite() {
            return domain(format!("cdf argument must be finite, got {x}"));
        }
        Ok(match *self {
            DistributionKind::StandardNormal => norm_cdf(x),
            DistributionKind::StudentT { df } => t_cdf(x, df as f64),
            DistributionKind::NoncentralT { df, delta } => nct_cdf(x, df as f64, delta)?,
            DistributionKind::NoncentralNormal { delta } => norm_cdf(x - delta),
            DistributionKind::ProductNormal => {
                let tail = product_normal_tail(x.abs())?;
                if x >= 0.0 {
                    1.0 - 0.5 * tail
                } else {
                    0.5 * tail
                }
            }
        })
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        self.validate()?;
        if !x.is_finite() {
            return domain(format!("pdf argument must be finite, got {x}"));
        }
        Ok(match *self {
            DistributionKind::StandardNormal => norm_pdf(x),
            DistributionKind::StudentT { df } => t_pdf(x, df as f64),
            DistributionKind::NoncentralT { df, delta } => nct_pdf(x, df as f64, delta)?,
            DistributionKind::NoncentralNormal { delta } => norm_pdf(x - delta),
            DistributionKind::ProductNormal => product_normal_pdf(x)?,
        })
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        self.validate()?;
        if !(p > 0.0 && p < 1.0) {
            return domain(format!("quantile probability must lie in (0, 1), got {p}"));
        }
        match *self {
            DistributionKind::StandardNormal => Ok(norm_quantile(p)),
            DistributionKind::NoncentralNormal { delta } => Ok(delta + norm_quantile(p)),
            DistributionKind::StudentT { df } => Ok(t_quantile(p, df as f64)),
            DistributionKind::NoncentralT { df, delta } => {
                let guess = delta + t_quantile(p, df as f64);
                let mut failure = None;
                let q = invert_monotone(
                    |x| match nct_cdf(x, df as f64, delta) {
                        Ok(v) => v,
                        Err(e) => {
                            failure = Some(e);
                            f64::NAN
                        }
                    },
                    p,
                    guess,
                    1.0,
                )?;
                match failure {
                    Some(e) => Err(e),
                    None => Ok(q),
                }
            }
            DistributionKind::ProductNormal => {
                if p == 0.5 {
                    return Ok(0.0);
                }
                // Symmetric: solve on the upper half through the two-sided tail.
                let tail = 2.0 * p.min(1.0 - p);
                let c = invert_monotone(
                    |c| if c <= 0.0 { 0.0 } else { 1.0 - product_normal_tail(c).unwrap_or(f64::NAN) },
                    1.0 - tail,
                    1.0,
                    1.0,
                )?
                .max(0.0);
                Ok(if p > 0.5 { c } else { -c })
            }
        }
    }
}

/// Free-function form of [`DistributionKind::cdf`].
pub fn cdf(kind: DistributionKind, x: f64) -> Result<f64> {
    kind.cdf(x)
}

/// Free-function form of [`DistributionKind::quantile`].
pub fn quantile(kind: DistributionKind, p: f64) -> Result<f64> {
    kind.quantile(p)
}

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail `1 - Phi(x)` without cancellation.
pub fn norm_sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

pub fn norm_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let mut x = -SQRT_2 * erfc_inv(2.0 * p);
    // One Halley step against whichever tail is more accurate.
    let e = if p < 0.5 { norm_cdf(x) - p } else { (1.0 - p) - norm_sf(x) };
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    if u.is_finite() {
        x -= u / (1.0 + 0.5 * x * u);
    }
    x
}

fn t_pdf(x: f64, nu: f64) -> f64 {
    let ln_c = ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - 0.5 * (nu * PI).ln();
    (ln_c - 0.5 * (nu + 1.0) * (x * x / nu).ln_1p()).exp()
}

fn t_cdf(x: f64, nu: f64) -> f64 {
    let x2 = x * x;
    if x2 < nu {
        // Near the center the complementary beta argument is small and accurate.
        let half = 0.5 * beta_reg(0.5, 0.5 * nu, x2 / (nu + x2));
        if x >= 0.0 {
            0.5 + half
        } else {
            0.5 - half
        }
    } else {
        let tail = 0.5 * beta_reg(0.5 * nu, 0.5, nu / (nu + x2));
        if x >= 0.0 {
            1.0 - tail
        } else {
            tail
        }
    }
}

fn t_quantile(p: f64, nu: f64) -> f64 {
    if p == 0.5 {
        return 0.0;
    }
    // Cauchy and df = 2 have closed forms.
    if nu == 1.0 {
        return (PI * (p - 0.5)).tan();
    }
    if nu == 2.0 {
        let a = 4.0 * p * (1.0 - p);
        return 2.0 * (p - 0.5) * (2.0 / a).sqrt();
    }
    let lower = p < 0.5;
    let tail = if lower { p } else { 1.0 - p };
    // Cornish–Fisher start, then safeguarded Newton on the lower tail.
    let z = norm_quantile(tail);
    let g1 = (z.powi(3) + z) / 4.0;
    let g2 = (5.0 * z.powi(5) + 16.0 * z.powi(3) + 3.0 * z) / 96.0;
    let mut x = z + g1 / nu + g2 / (nu * nu);
    let mut lo = f64::NEG_INFINITY;
    let mut hi = 0.0;
    for _ in 0..100 {
        let f = t_cdf(x, nu) - tail;
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let step = f / t_pdf(x, nu);
        let mut next = x - step;
        if !(next > lo && next < hi) {
            next = if lo.is_finite() { 0.5 * (lo + hi) } else { 2.0 * x.min(-1.0) };
        }
        if (next - x).abs() <= 1e-15 * (1.0 + x.abs()) {
            x = next;
            break;
        }
        x = next;
    }
    if lower {
        x
    } else {
        -x
    }
}

fn chi_scale_ln_density(s: f64, nu: f64) -> f64 {
    // Density of S = sqrt(chi2_nu / nu).
    std::f64::consts::LN_2 + 0.5 * nu * (0.5 * nu).ln() - ln_gamma(0.5 * nu) + (nu - 1.0) * s.ln()
        - 0.5 * nu * s * s
}

fn chi_scale_breakpoints(t: f64, nu: f64, delta: f64) -> Vec<f64> {
    let s_max = 1.0 + 14.0 / nu.sqrt();
    let mut pts = vec![0.0, s_max];
    let mode = ((nu - 1.0) / nu).max(0.0).sqrt();
    let sd = (0.5 / nu).sqrt();
    for k in [-4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0] {
        pts.push(mode + k * sd);
    }
    if t != 0.0 {
        let center = delta / t;
        let width = 1.0 / t.abs();
        for k in [-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0] {
            pts.push(center + k * width);
        }
    }
    pts.retain(|p| *p >= 0.0 && *p <= s_max);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    pts
}

fn nct_cdf(t: f64, nu: f64, delta: f64) -> Result<f64> {
    if delta == 0.0 {
        return Ok(t_cdf(t, nu));
    }
    let pts = chi_scale_breakpoints(t, nu, delta);
    let opts = QuadOptions { abs_tol: 1e-13, rel_tol: 1e-13, max_pieces: 4000 };
    // Integrate whichever tail is smaller, for accuracy near 0 and 1.
    let upper = t * 1.0 > delta;
    let est = integrate_with(
        |s| {
            if s <= 0.0 {
                return 0.0;
            }
            let w = chi_scale_ln_density(s, nu).exp();
            if upper {
                w * norm_sf(t * s - delta)
            } else {
                w * norm_cdf(t * s - delta)
            }
        },
        &pts,
        opts,
    )?;
    let lower_tail = if upper { 1.0 - est.value } else { est.value };
    Ok(lower_tail.clamp(0.0, 1.0))
}

fn nct_pdf(t: f64, nu: f64, delta: f64) -> Result<f64> {
    if delta == 0.0 {
        return Ok(t_pdf(t, nu));
    }
    let pts = chi_scale_breakpoints(t, nu, delta);
    let opts = QuadOptions { abs_tol: 1e-14, rel_tol: 1e-12, max_pieces: 4000 };
    let est = integrate_with(
        |s| {
            if s <= 0.0 {
                return 0.0;
            }
            let z = t * s - delta;
            (chi_scale_ln_density(s, nu) - 0.5 * z * z - LN_SQRT_2PI).exp() * s
        },
        &pts,
        opts,
    )?;
    Ok(est.value.max(0.0))
}

/// `Pr(|Z1 Z2| > c)` for independent standard normals.
pub fn product_normal_tail(c: f64) -> Result<f64> {
    if c.is_nan() || c < 0.0 {
        return domain(format!("product-normal tail needs c >= 0, got {c}"));
    }
    if c == 0.0 {
        return Ok(1.0);
    }
    if c.is_infinite() {
        return Ok(0.0);
    }
    // Integrand phi(z) Phi(-c/z) peaks near z = sqrt(c).
    let r = c.sqrt();
    let upper = 12.0f64.max(4.0 * r);
    let mut pts = vec![0.0, upper];
    for k in [0.125, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 4.0] {
        let p = k * r;
        if p < upper {
            pts.push(p);
        }
    }
    pts.sort_by(f64::total_cmp);
    let opts = QuadOptions { abs_tol: 1e-14, rel_tol: 1e-12, max_pieces: 2000 };
    let est = integrate_with(
        |z| if z <= 0.0 { 0.0 } else { norm_pdf(z) * norm_cdf(-c / z) },
        &pts,
        opts,
    )?;
    Ok((4.0 * est.value).clamp(0.0, 1.0))
}

/// Density of the product of two standard normals; `K0(|x|)/pi`.
fn product_normal_pdf(x: f64) -> Result<f64> {
    let c = x.abs();
    if c == 0.0 {
        return Ok(f64::INFINITY);
    }
    // f(x) = 2 * int_0^inf phi(z) phi(c/z) / z dz, peaked at z = sqrt(c).
    let r = c.sqrt();
    let upper = 12.0f64.max(4.0 * r);
    let mut pts = vec![0.0, upper];
    for k in [0.125, 0.25, 0.5, 1.0, 2.0, 4.0] {
        if k * r < upper {
            pts.push(k * r);
        }
    }
    pts.sort_by(f64::total_cmp);
    let est = integrate_with(
        |z| {
            if z <= 0.0 {
                0.0
            } else {
                let w = c / z;
                (-0.5 * (z * z + w * w) - 2.0 * LN_SQRT_2PI).exp() / z
            }
        },
        &pts,
        QuadOptions { abs_tol: 1e-15, rel_tol: 1e-12, max_pieces: 2000 },
    )
    .map_err(|e| match e {
        Error::NoConvergence { .. } => e,
        other => other,
    })?;
    Ok(2.0 * est.value)
}
