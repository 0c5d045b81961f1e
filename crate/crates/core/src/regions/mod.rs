//! Rejection regions of the S, PS and ASQ tests on the unit square.
//!
//! All sets are built from `m(x) = min(x, 1 - x)`. With the open strip
//! `C = (α/2, 1 - α/2)²`:
//!
//! * `S1`: `m(u) ≤ α/2` and `m(v) ≤ α/2`, the four corner squares.
//! * `D1 = {|u - v| ≤ α/4} ∩ C` and `D2 = {|u + v - 1| ≤ α/4} ∩ C`, the diagonal bands.
//! * `S3`: four triangles of base α/2 and height α/4 at the edge midpoints of `C`.
//! * `R_S = S1 ∪ D1 ∪ D2 ∪ S3`.
//!
//! The PS region keeps `S1` and the bands, drops `S3`, and removes the center
//! cone `{|u - v| ≤ 2|u + v - 1|} ∩ {|u + v - 1| ≤ 2|u - v|}`, which meets the
//! bands of level α in exactly their crossing `D1 ∩ D2` up to measure α²/8. Band
//! reach is limited by `w ≤ α + λ(1 - α)`, where `w` runs from α at the corner
//! end of a band to 1 at the center.
//!
//! ASQ chains are squares `[kα/2, (k+1)α/2)²` in corner-relative coordinates
//! `(m(u), m(v))`, for `k < λ/α`.
//!
//! Open and half-open edges only matter on lines of measure zero; they make
//! every slice along such a line measure what its neighbours measure.

mod measure;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

pub use measure::{profile, shape_area, slice_measure, Profile, Segment, Shape, Slice};

/// Largest significance level any region is defined for.
pub const ALPHA_MAX: f64 = 0.2;
pub const DEFAULT_LAMBDA: f64 = 0.5;
pub const DEFAULT_LADDER: [f64; 5] = [0.1, 0.05, 0.01, 0.005, 0.001];

const INTEGRAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CumulativePair {
    pub u: f64,
    pub v: f64,
}

impl CumulativePair {
    pub fn new(u: f64, v: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&u) || !(0.0..=1.0).contains(&v) {
            return domain(format!("cumulative pair ({u}, {v}) outside the unit square"));
        }
        Ok(Self { u, v })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    S,
    Ps,
    Asq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub family: Family,
    pub alpha: f64,
    pub lambda: f64,
    pub ladder: Vec<f64>,
    pub omit_center: bool,
}

impl RegionSpec {
    pub fn s(alpha: f64) -> Self {
        Self { family: Family::S, alpha, lambda: 1.0, ladder: Vec::new(), omit_center: false }
    }

    pub fn ps(alpha: f64, lambda: f64) -> Self {
        Self { family: Family::Ps, alpha, lambda, ladder: Vec::new(), omit_center: false }
    }

    pub fn asq(alpha: f64, lambda: f64, ladder: &[f64], omit_center: bool) -> Self {
        Self { family: Family::Asq, alpha, lambda, ladder: ladder.to_vec(), omit_center }
    }

    /// ASQ with the default ladder, `λ = 0.5` and the center squares omitted.
    pub fn asq_default(alpha: f64) -> Self {
        Self::asq(alpha, DEFAULT_LAMBDA, &DEFAULT_LADDER, true)
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        check_lambda(self.lambda)?;
        if self.family == Family::Asq {
            validate_ladder(&self.ladder, self.lambda)?;
            asq_levels(self.alpha, self.lambda)?;
        }
        Ok(())
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= ALPHA_MAX {
        Ok(())
    } else {
        Err(Error::Config(format!("alpha must lie in (0, {ALPHA_MAX}], got {alpha}")))
    }
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if (0.0..=1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(Error::Config(format!("lambda must lie in [0, 1], got {lambda}")))
    }
}

fn near_integer(x: f64) -> Option<u64> {
    let r = x.round();
    ((x - r).abs() <= INTEGRAL_TOL * x.abs().max(1.0) && r >= 0.0).then_some(r as u64)
}

/// Number of chain squares `K = 1/α` and number kept `λK`, both required integral.
pub(crate) fn asq_levels(alpha: f64, lambda: f64) -> Result<(u64, u64)> {
    check_alpha(alpha)?;
    check_lambda(lambda)?;
    let k = near_integer(1.0 / alpha)
        .filter(|&k| k > 0)
        .ok_or_else(|| Error::Config(format!("level {alpha} does not divide evenly into 1")))?;
    let kept = near_integer(lambda * k as f64)
        .ok_or_else(|| Error::Config(format!("lambda {lambda} times 1/{alpha} is not an integer")))?;
    Ok((k, kept))
}

/// Check 1/α ∈ ℕ, λ/α ∈ ℕ and pairwise divisibility for every ladder level.
pub fn validate_ladder(ladder: &[f64], lambda: f64) -> Result<()> {
    if ladder.is_empty() {
        return Err(Error::Config("ladder must not be empty".into()));
    }
    for &a in ladder {
        asq_levels(a, lambda)?;
    }
    for (i, &a) in ladder.iter().enumerate() {
        for &b in &ladder[i + 1..] {
            let (small, large) = if a < b { (a, b) } else { (b, a) };
            if small == large {
                return Err(Error::Config(format!("ladder level {a} repeated")));
            }
            if near_integer(large / small).is_none() {
                return Err(Error::Config(format!("ladder level {small} does not divide {large}")));
            }
        }
    }
    Ok(())
}

#[inline]
pub fn m(x: f64) -> f64 {
    x.min(1.0 - x)
}

#[inline]
pub(crate) fn in_s1(u: f64, v: f64, alpha: f64) -> bool {
    m(u) <= 0.5 * alpha && m(v) <= 0.5 * alpha
}

#[inline]
pub(crate) fn in_central(u: f64, v: f64, alpha: f64) -> bool {
    m(u) > 0.5 * alpha && m(v) > 0.5 * alpha
}

#[inline]
pub(crate) fn in_d1(u: f64, v: f64, alpha: f64) -> bool {
    4.0 * (u - v).abs() <= alpha && in_central(u, v, alpha)
}

#[inline]
pub(crate) fn in_d2(u: f64, v: f64, alpha: f64) -> bool {
    4.0 * (u + v - 1.0).abs() <= alpha && in_central(u, v, alpha)
}

#[inline]
pub(crate) fn in_s3(u: f64, v: f64, alpha: f64) -> bool {
    let reach = 0.75 * alpha;
    in_central(u, v, alpha) && ((v - 0.5).abs() + m(u) <= reach || (u - 0.5).abs() + m(v) <= reach)
}

/// Center cone removed from both PS band routes.
#[inline]
pub(crate) fn in_cone(u: f64, v: f64) -> bool {
    let a = (u - v).abs();
    let b = (u + v - 1.0).abs();
    a <= 2.0 * b && b <= 2.0 * a
}

#[inline]
fn band_reach(u: f64, v: f64) -> (f64, f64) {
    ((u + v).min(2.0 - u - v), 1.0 - (v - u).abs())
}

pub(crate) fn s_contains_unchecked(u: f64, v: f64, alpha: f64) -> bool {
    in_s1(u, v, alpha) || in_d1(u, v, alpha) || in_d2(u, v, alpha) || in_s3(u, v, alpha)
}

pub fn s_contains(p: CumulativePair, alpha: f64) -> Result<bool> {
    check_alpha(alpha)?;
    Ok(s_contains_unchecked(p.u, p.v, alpha))
}

pub(crate) fn ps_contains_unchecked(u: f64, v: f64, alpha: f64, lambda: f64) -> bool {
    if in_s1(u, v, alpha) {
        return true;
    }
    if in_cone(u, v) {
        return false;
    }
    let limit = alpha + lambda * (1.0 - alpha);
    let (w1, w2) = band_reach(u, v);
    (in_d1(u, v, alpha) && w1 <= limit) || (in_d2(u, v, alpha) && w2 <= limit)
}

pub fn ps_contains(p: CumulativePair, alpha: f64, lambda: f64) -> Result<bool> {
    check_alpha(alpha)?;
    check_lambda(lambda)?;
    Ok(ps_contains_unchecked(p.u, p.v, alpha, lambda))
}

pub(crate) fn ps_pvalue_unchecked(u: f64, v: f64, lambda: f64) -> f64 {
    let (mu, mv) = (m(u), m(v));
    let mut best = 1.0f64;
    let corner = 2.0 * mu.max(mv);
    if corner <= ALPHA_MAX {
        best = corner;
    }
    if in_cone(u, v) {
        return best;
    }
    // Band routes need α < 2·min(m(u), m(v)) and α ≤ α_max.
    let hi = 2.0 * mu.min(mv);
    let (w1, w2) = band_reach(u, v);
    for (dist, w) in [((u - v).abs(), w1), ((u + v - 1.0).abs(), w2)] {
        let mut lo = 4.0 * dist;
        if lambda < 1.0 {
            lo = lo.max((w - lambda) / (1.0 - lambda));
        }
        if lo < hi && lo <= ALPHA_MAX {
            best = best.min(lo);
        }
    }
    best
}

/// Smallest α ≤ 0.2 at which the PS region contains the pair, or 1.
pub fn ps_pvalue(p: CumulativePair, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(ps_pvalue_unchecked(p.u, p.v, lambda))
}

/// Scaled coordinate, snapped to the nearest grid line when within rounding noise.
#[inline]
fn scaled(x: f64, scale: f64) -> f64 {
    let r = m(x) * scale;
    let n = r.round();
    if (r - n).abs() <= INTEGRAL_TOL { n } else { r }
}

pub(crate) fn asq_contains_levels(u: f64, v: f64, k_total: u64, kept: u64, omit_center: bool) -> bool {
    let scale = 2.0 * k_total as f64;
    let (ru, rv) = (scaled(u, scale), scaled(v, scale));
    // Half-open squares [k, k+1)² in scaled coordinates.
    let k = ru.floor();
    if k != rv.floor() || k < 0.0 || k >= k_total as f64 {
        return false;
    }
    let k = k as u64;
    k < kept && !(omit_center && k == k_total - 1)
}

pub fn asq_contains(p: CumulativePair, alpha: f64, lambda: f64, omit_center: bool) -> Result<bool> {
    let (k, kept) = asq_levels(alpha, lambda)?;
    Ok(asq_contains_levels(p.u, p.v, k, kept, omit_center))
}

/// Smallest ladder level whose ASQ region contains the pair.
pub fn asq_threshold(p: CumulativePair, spec: &RegionSpec) -> Result<Option<f64>> {
    check_lambda(spec.lambda)?;
    validate_ladder(&spec.ladder, spec.lambda)?;
    let mut levels = spec.ladder.clone();
    levels.sort_by(|a, b| b.total_cmp(a));
    let mut found = None;
    for a in levels {
        let (k, kept) = asq_levels(a, spec.lambda)?;
        if asq_contains_levels(p.u, p.v, k, kept, spec.omit_center) {
            found = Some(a);
        }
    }
    Ok(found)
}

/// Membership in the region described by `spec` at its own α.
///
/// For PS, `effective` selects the p-value region `{p ≤ α}` instead of `R_PS`.
pub fn contains(p: CumulativePair, spec: &RegionSpec, effective: bool) -> Result<bool> {
    spec.validate()?;
    Ok(match spec.family {
        Family::S => s_contains_unchecked(p.u, p.v, spec.alpha),
        Family::Ps if effective => ps_pvalue_unchecked(p.u, p.v, spec.lambda) <= spec.alpha,
        Family::Ps => ps_contains_unchecked(p.u, p.v, spec.alpha, spec.lambda),
        Family::Asq => asq_contains(p, spec.alpha, spec.lambda, spec.omit_center)?,
    })
}

fn shape_for(spec: &RegionSpec, at_alpha: f64, effective: bool) -> Result<Shape> {
    let mut at = spec.clone();
    at.alpha = at_alpha;
    at.validate()?;
    Ok(match spec.family {
        Family::S => Shape::S { alpha: at_alpha },
        Family::Ps if effective => Shape::PsEffective { alpha: at_alpha, lambda: spec.lambda },
        Family::Ps => Shape::Ps { alpha: at_alpha, lambda: spec.lambda },
        Family::Asq => Shape::Asq { alpha: at_alpha, lambda: spec.lambda, omit_center: spec.omit_center },
    })
}

/// Area of the region at level `at_alpha`.
pub fn region_area(spec: &RegionSpec, at_alpha: f64, effective: bool) -> Result<f64> {
    Ok(shape_area(&shape_for(spec, at_alpha, effective)?))
}

/// One-dimensional measure of a slice of the region at level `at_alpha`.
pub fn cross_section(spec: &RegionSpec, fixed: Slice, at_alpha: f64, effective: bool) -> Result<f64> {
    let x = match fixed {
        Slice::U(x) | Slice::V(x) => x,
    };
    if !(0.0..=1.0).contains(&x) {
        return domain(format!("slice coordinate {x} outside [0, 1]"));
    }
    Ok(slice_measure(&shape_for(spec, at_alpha, effective)?, fixed))
}
