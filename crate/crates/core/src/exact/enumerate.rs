//! Brute-force enumeration over joint assignments. Deliberately independent of
//! variable elimination so the two can check each other.

use crate::error::{Error, Result};
use crate::model::{Evidence, FactorizedModel, Scope, TableFactor, VarId};

/// Largest joint state space the enumeration routines will visit.
pub const ENUMERATION_CAP: usize = 1 << 20;

/// The full product of `tables` as a table over `vars` (every variable the
/// tables mention must be in `vars`), built one assignment at a time.
pub fn joint_table(tables: &[TableFactor], vars: &[VarId], cards: &[usize]) -> Result<TableFactor> {
    let scope = Scope::new(vars.to_vec(), cards.to_vec())?;
    if scope.size() > ENUMERATION_CAP {
        return Err(Error::structure(format!(
            "{} joint states exceed the enumeration cap",
            scope.size()
        )));
    }
    for t in tables {
        if let Some(v) = t.vars().iter().find(|v| !vars.contains(v)) {
            return Err(Error::structure(format!("table mentions {v} outside the enumeration")));
        }
    }
    let width = vars.iter().map(|v| v.index() + 1).max().unwrap_or(0);
    let mut full = vec![0usize; width];
    let mut values = Vec::with_capacity(scope.size());
    for idx in 0..scope.size() {
        for (v, s) in vars.iter().zip(scope.assignment_of(idx)) {
            full[v.index()] = s;
        }
        values.push(tables.iter().map(|t| t.at_full(&full)).product());
    }
    TableFactor::new(scope, values)
}

/// `Q(t)` over the unobserved target variables, by enumeration, with any
/// auxiliary variables of `q` (ids beyond the target domain) summed out.
fn q_over_targets(q: &FactorizedModel, p: &FactorizedModel, ev: &Evidence) -> Result<TableFactor> {
    if !q.domain().extends(p.domain()) {
        return Err(Error::structure("approximation domain does not extend the target domain"));
    }
    let t_vars = ev.unobserved(p.domain());
    let extra: Vec<VarId> = q.domain().ids().skip(p.domain().len()).collect();
    let mut all = t_vars.clone();
    all.extend(&extra);
    let cards = q.domain().cards_of(&all);
    let tables: Vec<TableFactor> = q.tables().map(|t| t.reduce(ev)).collect();
    let joint = joint_table(&tables, &all, &cards)?;
    let mut qt = joint.marginalize(&t_vars)?;
    if qt.normalize() <= 0.0 {
        return Err(Error::invalid("approximation has no mass"));
    }
    Ok(qt)
}

fn p_over_targets(p: &FactorizedModel, ev: &Evidence) -> Result<TableFactor> {
    let t_vars = ev.unobserved(p.domain());
    let cards = p.domain().cards_of(&t_vars);
    let tables: Vec<TableFactor> = p.tables().map(|t| t.reduce(ev)).collect();
    joint_table(&tables, &t_vars, &cards)
}

/// `D(Q(T) ‖ P(T | o))` by full enumeration. `+inf` when `Q` puts mass where
/// the posterior has none (or the evidence is impossible).
pub fn exact_kl(q: &FactorizedModel, p: &FactorizedModel, ev: &Evidence) -> Result<f64> {
    let qt = q_over_targets(q, p, ev)?;
    let mut pt = p_over_targets(p, ev)?;
    if pt.normalize() <= 0.0 {
        return Ok(f64::INFINITY);
    }
    let mut kl = 0.0;
    for (&qv, &pv) in qt.values().iter().zip(pt.values()) {
        if qv == 0.0 {
            continue;
        }
        if pv == 0.0 {
            return Ok(f64::INFINITY);
        }
        kl += qv * (qv / pv).ln();
    }
    Ok(kl.max(0.0))
}

/// `F[Q] = E_Q[log P(T, o) − log Q(T)]` by full enumeration over `T`
/// (and over auxiliary variables, which are marginalized first).
pub fn enumerated_bound(q: &FactorizedModel, p: &FactorizedModel, ev: &Evidence) -> Result<f64> {
    let qt = q_over_targets(q, p, ev)?;
    let pt = p_over_targets(p, ev)?;
    let mut f = 0.0;
    for (&qv, &pv) in qt.values().iter().zip(pt.values()) {
        if qv == 0.0 {
            continue;
        }
        if pv == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        f += qv * (pv.ln() - qv.ln());
    }
    Ok(f - p.log_z())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DirectedFamily, Domain};

    fn single(dist: [f64; 2]) -> FactorizedModel {
        let d = Domain::from_pairs([("x", 2)]).unwrap();
        let t = TableFactor::new(Scope::from_domain(&d, &[VarId(0)]).unwrap(), dist.to_vec()).unwrap();
        let f = DirectedFamily::new(VarId(0), t, 1e-12).unwrap();
        FactorizedModel::bayesian_network(d, vec![f]).unwrap()
    }

    #[test]
    fn kl_of_identical_is_zero() {
        let p = single([0.9, 0.1]);
        assert_eq!(exact_kl(&p, &p, &Evidence::new()).unwrap(), 0.0);
    }

    #[test]
    fn kl_uniform_vs_skewed() {
        let q = single([0.5, 0.5]);
        let p = single([0.9, 0.1]);
        let want = 0.5 * (0.5f64 / 0.9).ln() + 0.5 * (0.5f64 / 0.1).ln();
        assert!((exact_kl(&q, &p, &Evidence::new()).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn kl_infinite_off_support() {
        let q = single([0.5, 0.5]);
        let p = single([1.0, 0.0]);
        assert_eq!(exact_kl(&q, &p, &Evidence::new()).unwrap(), f64::INFINITY);
        assert_eq!(enumerated_bound(&q, &p, &Evidence::new()).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn cap_is_enforced() {
        let vars: Vec<VarId> = (0..21).map(VarId).collect();
        assert!(joint_table(&[], &vars, &[2; 21]).is_err());
    }
}
