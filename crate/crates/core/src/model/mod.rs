//! Discrete variables, dense factor algebra, evidence, directed structure
//! and the target model representation.

mod domain;
mod evidence;
mod factorized;
mod family;
pub mod graph;
pub mod io;
mod scope;
pub mod semiring;
mod table;

pub use domain::{Domain, VarId, VariableSpec};
pub use evidence::Evidence;
pub use factorized::{FactorizedModel, ModelFactor};
pub use family::DirectedFamily;
pub use graph::Dag;
pub use scope::Scope;
pub use semiring::{Expectation, Semiring};
pub use table::{Table, TableFactor};
