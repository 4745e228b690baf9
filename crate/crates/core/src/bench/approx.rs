//! Approximating structures for the synthetic networks.

use crate::bench::dbn::DbnConfig;
use crate::error::{Error, Result};
use crate::variational::hidden::mixture_mean_field;
use crate::variational::structure::QStructure;

fn check_card(v_card: usize) -> Result<()> {
    if v_card == 0 {
        return Err(Error::structure("hidden variables need at least one state"));
    }
    Ok(())
}

/// Keeps the edges inside each slice and links slices through one hidden
/// variable per slice: `V_1 → … → V_N`, with `V_n` a parent of every chain
/// variable of slice `n`.
pub fn build_vertical_approx(cfg: &DbnConfig, v_card: usize) -> Result<QStructure> {
    check_card(v_card)?;
    cfg.validate()?;
    let mut b = QStructure::builder(&cfg.domain(), &cfg.evidence());
    let mut prev = None;
    for n in 0..cfg.slices {
        let v = b.latent(&format!("V_slice{}", n + 1), v_card)?;
        if let Some(p) = prev {
            b.edge(p, v)?;
        }
        for i in 0..cfg.vars_per_slice {
            b.edge(v, cfg.chain_var(n, i))?;
            if i > 0 {
                b.edge(cfg.chain_var(n, i - 1), cfg.chain_var(n, i))?;
            }
        }
        prev = Some(v);
    }
    b.build()
}

/// Keeps the edges along each chain and links chains through one hidden
/// variable per chain: `V^1 → … → V^m`, with `V^i` a parent of every
/// variable of chain `i`.
pub fn build_horizontal_approx(cfg: &DbnConfig, v_card: usize) -> Result<QStructure> {
    check_card(v_card)?;
    cfg.validate()?;
    let mut b = QStructure::builder(&cfg.domain(), &cfg.evidence());
    let mut prev = None;
    for i in 0..cfg.vars_per_slice {
        let v = b.latent(&format!("V_chain{}", i + 1), v_card)?;
        if let Some(p) = prev {
            b.edge(p, v)?;
        }
        for n in 0..cfg.slices {
            b.edge(v, cfg.chain_var(n, i))?;
            if n > 0 {
                b.edge(cfg.chain_var(n - 1, i), cfg.chain_var(n, i))?;
            }
        }
        prev = Some(v);
    }
    b.build()
}

/// One hidden mixture variable with `k` states over the chain variables.
pub fn build_mixture_approx(cfg: &DbnConfig, k: usize) -> Result<QStructure> {
    cfg.validate()?;
    mixture_mean_field(&cfg.domain(), &cfg.evidence(), k)
}
