//! Distributions, quadrature and root finding.

pub mod dist;
pub mod quad;
pub mod roots;

pub use dist::{cdf, norm_cdf, norm_pdf, norm_quantile, norm_sf, product_normal_tail, quantile, DistributionKind};
pub use quad::{integrate, integrate_with, Estimate, QuadOptions};
