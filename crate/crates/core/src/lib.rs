//! Local Taylor-series reduced-order models on spectral submanifolds, their
//! Padé globalization, reduced-dynamics analysis and a data-driven rational
//! regression pipeline.

pub mod datadriven;
pub mod error;
pub mod io;
pub mod linalg;
pub mod pade;
pub mod reduced;
pub mod series;
pub mod singularity;
pub mod ssm;
pub mod systems;

pub use error::{Error, Result};
pub use series::{compose_truncated, multiply_truncated, MultiIndex, MultiSeries};
