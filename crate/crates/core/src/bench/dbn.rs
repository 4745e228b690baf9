//! Synthetic dynamic Bayesian networks.
//!
//! Each slice holds `vars_per_slice` binary chain variables followed by one
//! observed binary variable. Chain variable `i` of slice `n` has parents
//! (when they exist) chain `i` of slice `n − 1` and chain `i − 1` of slice
//! `n`; the observed variable of a slice has every chain variable of the
//! slice as parents. Every observed variable is set to state 0.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DirectedFamily, Domain, Evidence, FactorizedModel, Scope, TableFactor, VarId};
use crate::rng::{dirichlet, stream};

/// Dirichlet parameter of every CPT column.
pub const DIRICHLET_ALPHA: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DbnConfig {
    pub slices: usize,
    /// Hidden chain variables per slice; the observed variable is extra.
    pub vars_per_slice: usize,
    pub seed: u64,
}

impl DbnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.slices == 0 || self.vars_per_slice == 0 {
            return Err(Error::Options("slices and vars_per_slice must be at least 1".into()));
        }
        Ok(())
    }

    fn stride(&self) -> usize {
        self.vars_per_slice + 1
    }

    /// Chain variable `chain` of slice `slice` (both zero-based).
    pub fn chain_var(&self, slice: usize, chain: usize) -> VarId {
        VarId(slice * self.stride() + chain)
    }

    pub fn observed_var(&self, slice: usize) -> VarId {
        VarId(slice * self.stride() + self.vars_per_slice)
    }

    pub fn n_vars(&self) -> usize {
        self.slices * self.stride()
    }

    /// Parents of every variable, indexed by id.
    pub fn parents(&self) -> Vec<Vec<VarId>> {
        let mut out = Vec::with_capacity(self.n_vars());
        for n in 0..self.slices {
            for i in 0..self.vars_per_slice {
                let mut ps = Vec::new();
                if n > 0 {
                    ps.push(self.chain_var(n - 1, i));
                }
                if i > 0 {
                    ps.push(self.chain_var(n, i - 1));
                }
                out.push(ps);
            }
            out.push((0..self.vars_per_slice).map(|i| self.chain_var(n, i)).collect());
        }
        out
    }

    /// Binary domain with names `X{chain}_{slice}` and `O_{slice}` (one-based).
    pub fn domain(&self) -> Domain {
        let mut d = Domain::new();
        for n in 0..self.slices {
            for i in 0..self.vars_per_slice {
                d.add(format!("X{}_{}", i + 1, n + 1), 2).expect("fresh names");
            }
            d.add(format!("O_{}", n + 1), 2).expect("fresh names");
        }
        d
    }

    /// Every observed variable set to 0.
    pub fn evidence(&self) -> Evidence {
        Evidence::from_pairs((0..self.slices).map(|n| (self.observed_var(n), 0)))
    }
}

/// Samples a network: CPT columns are Dirichlet(½, ½) draws from the stream
/// `(seed, "dbn", 0)`, variables in id order, columns in table order.
pub fn generate_dbn(cfg: &DbnConfig) -> Result<(FactorizedModel, Evidence)> {
    cfg.validate()?;
    let domain = cfg.domain();
    let mut rng = stream(cfg.seed, "dbn", 0);
    let mut families = Vec::with_capacity(cfg.n_vars());
    for (v, parents) in cfg.parents().into_iter().enumerate() {
        let child = VarId(v);
        let mut vars = parents;
        vars.push(child);
        let scope = Scope::from_domain(&domain, &vars)?;
        let mut values = Vec::with_capacity(scope.size());
        for _ in 0..scope.size() / 2 {
            values.extend(dirichlet(&mut rng, DIRICHLET_ALPHA, 2));
        }
        families.push(DirectedFamily::new(child, TableFactor::new(scope, values)?, 1e-9)?);
    }
    let model = FactorizedModel::bayesian_network(domain, families)?;
    Ok((model, cfg.evidence()))
}
