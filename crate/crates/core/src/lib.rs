//! Truncated boson operators, seminorm diagnostics and cutoff dynamics.

pub mod convergence;
pub mod dynamics;
pub mod error;
pub mod fock;
pub mod linalg;
pub mod models;
pub mod seminorm;
pub mod spin;
pub mod tensor;

pub use error::{Error, Result};
pub use fock::{Band, FockOperator, FockSpace, Growth, ProjectionFamily, TruncationSpec};
pub use seminorm::{DecayFunction, SeminormIndex, Weighting};
pub use spin::{Axis, RelevantState, SpinOperator, SpinSystem};
pub use tensor::SpinBosonOperator;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/truncation.md")]
    mod truncation {}
    #[doc = include_str!("../../../book/src/seminorms.md")]
    mod seminorms {}
    #[doc = include_str!("../../../book/src/dynamics.md")]
    mod dynamics {}
    #[doc = include_str!("../../../book/src/models.md")]
    mod models {}
    #[doc = include_str!("../../../book/src/studies.md")]
    mod studies {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
