//! Which target factors and which approximation families can influence the
//! update of a family, decided by d-separation in the approximation.

use crate::error::Result;
use crate::model::{Evidence, FactorizedModel};
use crate::variational::engine::TargetTerms;
use crate::variational::structure::QStructure;

/// Per family (indexed like [`QStructure::families`]):
/// `fp` holds indices of target factors `i` with `X_j` not d-separated from
/// `D_i` given `U_j`; `fq` holds indices of other families `j'` with `X_j`
/// not d-separated from `{X_j'} ∪ U_j'` given `U_j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelevanceSets {
    pub fp: Vec<Vec<usize>>,
    pub fq: Vec<Vec<usize>>,
    /// `fp` as positions into the engine's term list.
    pub(crate) fp_terms: Vec<Vec<usize>>,
}

pub(crate) fn compute_relevance(s: &QStructure, terms: &TargetTerms) -> Result<RelevanceSets> {
    let dag = s.dag();
    let fams = s.families();
    let mut fp = Vec::with_capacity(fams.len());
    let mut fp_terms = Vec::with_capacity(fams.len());
    let mut fq = Vec::with_capacity(fams.len());
    for fam in fams {
        let reach = dag.reachable(fam.child, &fam.parents);
        let linked = |ys: &[crate::model::VarId]| {
            ys.iter().any(|y| !fam.parents.contains(y) && reach[y.index()])
        };
        let mut p_idx = Vec::new();
        let mut t_idx = Vec::new();
        for (pos, (i, t)) in terms.logs.iter().enumerate() {
            if linked(t.vars()) {
                p_idx.push(*i);
                t_idx.push(pos);
            }
        }
        let q_idx = fams
            .iter()
            .enumerate()
            .filter(|(_, other)| other.child != fam.child)
            .filter(|(_, other)| {
                linked(&other.scope_vars())
            })
            .map(|(k, _)| k)
            .collect();
        fp.push(p_idx);
        fp_terms.push(t_idx);
        fq.push(q_idx);
    }
    Ok(RelevanceSets { fp, fq, fp_terms })
}

/// Relevance sets of `structure` with respect to the target `p` under `ev`.
pub fn relevance_sets(
    structure: &QStructure,
    p: &FactorizedModel,
    ev: &Evidence,
) -> Result<RelevanceSets> {
    structure.check_target(p, ev)?;
    compute_relevance(structure, &TargetTerms::new(p, ev))
}
