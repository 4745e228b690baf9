//! Variational approximation of posteriors in discrete graphical models.
//!
//! The crate provides three families of approximating distributions, all
//! fitted by coordinate ascent on a lower bound of the log-likelihood of
//! the evidence:
//!
//! * Bayesian-network approximations ([`variational::bn`]), covering mean
//!   field and structured mean field;
//! * chain-graph approximations ([`variational::cg`]), which add globally
//!   normalized potentials to the directed families;
//! * hidden-variable approximations ([`variational::hidden`]), which extend
//!   the approximating network with auxiliary variables and relax the
//!   resulting conditional entropy with a factored variational table.
//!
//! Exact inference by variable elimination ([`exact`]) is used both inside
//! the approximations and as the reference for every bound. The [`bench`]
//! module generates synthetic dynamic Bayesian networks and runs the
//! comparison harness.

pub mod bench;
pub mod error;
pub mod exact;
pub mod model;
pub mod rng;
pub mod variational;

pub use error::{Error, Result};
pub use model::{
    DirectedFamily, Domain, Evidence, FactorizedModel, ModelFactor, Scope, TableFactor, VarId,
    VariableSpec,
};
