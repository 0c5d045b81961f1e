//! Intersection-union tests for the indirect effect in mediation analysis.
//!
//! The crate covers the rejection-region geometry of the S, PS and ASQ tests,
//! the Sobel, maxP and product-normal baselines, a seeded simulation engine,
//! the single-null worst-case type I error analysis of the PS test, and a
//! batch scan over tabular data.

pub mod error;
pub mod linmod;
pub mod medtests;
pub mod regions;
pub mod numerics;
pub mod scan;
pub mod simlab;
pub mod worstcase;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
