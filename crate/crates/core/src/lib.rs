//! Fast elastoplastic correction of linear elastic finite element results
//! under proportional cyclic loading.
//!
//! A linear elastic solution at `f = 1` is scaled by a load history `f(t)`
//! and corrected point by point with a Neuber-type energy constraint and a
//! Chaboche hardening model reduced to scalar ratios along the elastic stress
//! direction.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corrector;
pub mod error;
pub mod field;
pub mod load;
pub mod material;
pub mod oracle;
pub mod qoi;
pub mod reconstruction;
pub mod surrogate;
pub mod tensor;

pub use corrector::{integrate_point, step, CorrectedSeries, Origin, ScalarCorrectorState, SolverSettings};
pub use error::{Error, Result};
pub use load::LoadHistory;
pub use material::MaterialParams;
pub use qoi::QoiKind;
pub use reconstruction::ElasticPointRecord;
pub use tensor::SymTensor3;
