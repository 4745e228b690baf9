//! Exact inference: log-evidence, partition functions, marginals and KL
//! divergences. Everything here is the reference the variational bounds are
//! checked against.

mod eliminate;
pub mod enumerate;

pub use eliminate::{eliminate, marginal, EliminationOrder};
pub use enumerate::{enumerated_bound, exact_kl, joint_table, ENUMERATION_CAP};

use crate::error::Result;
use crate::model::{Evidence, FactorizedModel, Scope, TableFactor, VarId};

/// `log Σ_x Π_i f_i(x)` over every variable in the tables; `-inf` for an all-zero product.
pub fn log_total(tables: Vec<TableFactor>) -> f64 {
    let order = EliminationOrder::min_fill(tables.iter().map(|t| t.scope()), &[]);
    let t = eliminate(tables, &order);
    t.values().iter().sum::<f64>().ln()
}

/// `log Z` of the model's factor product.
pub fn log_partition(model: &FactorizedModel) -> f64 {
    log_total(model.tables().cloned().collect())
}

/// `log P(o) = log Σ_t Π_i φ_i(t, o) − log Z_P`; `-inf` when the evidence is impossible.
pub fn log_evidence(model: &FactorizedModel, ev: &Evidence) -> f64 {
    let reduced = model.tables().map(|t| t.reduce(ev)).collect();
    log_total(reduced) - model.log_z()
}

/// Posterior marginal `P(vars | ev)`, normalized. Returns `None` when the
/// evidence has probability zero.
pub fn posterior_marginal(
    model: &FactorizedModel,
    ev: &Evidence,
    vars: &[VarId],
) -> Result<Option<TableFactor>> {
    let free: Vec<VarId> = vars.iter().copied().filter(|v| !ev.contains(*v)).collect();
    let keep = Scope::from_domain(model.domain(), &free)?;
    let reduced = model.tables().map(|t| t.reduce(ev)).collect();
    let mut m = marginal(reduced, &keep, None);
    if m.normalize() > 0.0 {
        Ok(Some(m))
    } else {
        Ok(None)
    }
}
