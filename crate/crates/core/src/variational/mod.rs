//! Variational approximations and their coordinate-ascent fitters.

pub(crate) mod ascent;
pub mod bn;
pub mod cg;
pub mod derivative;
pub(crate) mod engine;
pub mod hidden;
pub mod options;
pub mod relevance;
pub mod structure;

pub use bn::BnApproximation;
pub use cg::CgApproximation;
pub use hidden::HiddenApproximation;
pub use options::{Block, Diagnostics, FitResult, OptimizerOptions, RestartSummary, TraceLevel, TraceStep};
pub use relevance::RelevanceSets;
pub use structure::{FamilySpec, QStructure, StructureBuilder, StructureFile};
