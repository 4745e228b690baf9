//! Analytic parameter derivatives of expectations and of the bound, checked
//! against central finite differences.
//!
//! Parameters are treated as free coordinates: the polynomial (or, for
//! chain graphs, the ratio of polynomials) defining the expectation is
//! differentiated without the simplex constraint.

use crate::error::{Error, Result};
use crate::exact::marginal;
use crate::model::{
    DirectedFamily, Evidence, Expectation, FactorizedModel, Scope, Table, TableFactor, VarId,
};
use crate::variational::bn::BnApproximation;
use crate::variational::cg::CgApproximation;
use crate::variational::engine::Engine;
use crate::variational::structure::QStructure;

/// Step used by the central differences.
pub const FD_STEP: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DerivativeReport {
    pub analytic: f64,
    pub numeric: f64,
    /// `|analytic − numeric| / max(|analytic|, |numeric|, 1e-6)`
    pub relative_error: f64,
}

impl DerivativeReport {
    fn new(analytic: f64, numeric: f64) -> Self {
        let scale = analytic.abs().max(numeric.abs()).max(1e-6);
        DerivativeReport { analytic, numeric, relative_error: (analytic - numeric).abs() / scale }
    }
}

/// Sum over all assignments of `∏ tables · (1, Σ terms)`, after clamping `c`.
fn total(tables: &[TableFactor], terms: &[Table<Expectation>], entropic: bool, c: &Evidence) -> Expectation {
    let mut factors: Vec<Table<Expectation>> = tables
        .iter()
        .map(|t| {
            if entropic {
                t.map(Expectation::entropic)
            } else {
                t.map(Expectation::weight)
            }
        })
        .collect();
    factors.extend(terms.iter().cloned());
    let factors = factors.into_iter().map(|f| f.reduce(c)).collect();
    marginal(factors, &Scope::empty(), None).values()[0]
}

fn central<F: Fn(&[TableFactor]) -> f64>(tables: &[TableFactor], which: usize, entry: usize, f: F) -> f64 {
    let mut plus = tables.to_vec();
    plus[which].values_mut()[entry] += FD_STEP;
    let mut minus = tables.to_vec();
    minus[which].values_mut()[entry] -= FD_STEP;
    (f(&plus) - f(&minus)) / (2.0 * FD_STEP)
}

struct Coordinate {
    /// index of the family
    family: usize,
    /// flat index of the entry in the family table
    entry: usize,
    /// `(x_j, u_j)` as evidence
    xu: Evidence,
    /// `u_j` as evidence
    u: Evidence,
}

fn coordinate(s: &QStructure, fams: &[DirectedFamily], child: VarId, state: usize, parents: &[usize]) -> Result<Coordinate> {
    let family = s
        .family_index(child)
        .ok_or_else(|| Error::structure(format!("no family for variable {child}")))?;
    let fam = &fams[family];
    if parents.len() != fam.parents().len() {
        return Err(Error::invalid("parent assignment has the wrong length"));
    }
    let mut states = parents.to_vec();
    states.push(state);
    if states.iter().zip(fam.cpt().scope().cards()).any(|(s, c)| s >= c) {
        return Err(Error::invalid("state out of range"));
    }
    let u = Evidence::from_pairs(fam.parents().iter().copied().zip(parents.iter().copied()));
    let xu = u.clone().with(child, state);
    Ok(Coordinate { family, entry: fam.cpt().scope().index_of(&states), xu, u })
}

fn term_of(f: &TableFactor) -> Table<Expectation> {
    f.map(Expectation::term)
}

fn cpts(fams: &[DirectedFamily]) -> Vec<TableFactor> {
    fams.iter().map(|f| f.cpt().clone()).collect()
}

/// `∂E_Q[f] / ∂θ(x | u) = Q(u) · E_{Q(·|x,u)}[f]` for a network `Q` and a
/// table `f` that does not depend on the parameters.
pub fn expectation_derivative_bn(
    q: &BnApproximation,
    f: &TableFactor,
    child: VarId,
    state: usize,
    parents: &[usize],
) -> Result<DerivativeReport> {
    let c = coordinate(q.structure(), q.families(), child, state, parents)?;
    let tables = cpts(q.families());
    let term = [term_of(f)];
    let at_xu = total(&tables, &term, false, &c.xu);
    let q_u = total(&tables, &[], false, &c.u).p;
    let analytic = q_u * at_xu.s / at_xu.p;
    let numeric = central(&tables, c.family, c.entry, |t| total(t, &term, false, &Evidence::new()).s);
    Ok(DerivativeReport::new(analytic, numeric))
}

/// `∂F[Q] / ∂θ(x | u) = Q(u) · (F[Q | x, u] − log Q(x, u) − 1)`.
pub fn derivative_check(
    q: &BnApproximation,
    p: &FactorizedModel,
    ev: &Evidence,
    child: VarId,
    state: usize,
    parents: &[usize],
) -> Result<DerivativeReport> {
    let s = q.structure().clone();
    let e = Engine::new(&s, p, ev)?;
    let c = coordinate(&s, q.families(), child, state, parents)?;
    let tables = cpts(q.families());
    let cond = crate::variational::bn::evaluate_bound(q, p, ev, &c.xu)?;
    let q_xu = total(&tables, &[], false, &c.xu).p;
    let q_u = total(&tables, &[], false, &c.u).p;
    let analytic = q_u * (cond - q_xu.ln() - 1.0);
    let poly = |t: &[TableFactor]| {
        let x = total(t, &e.terms.tables, true, &Evidence::new());
        x.s + e.terms.constant * x.p
    };
    let numeric = central(&tables, c.family, c.entry, poly);
    Ok(DerivativeReport::new(analytic, numeric))
}

fn cg_tables(q: &CgApproximation) -> Vec<TableFactor> {
    let mut t = cpts(q.families());
    t.extend(q.potentials().iter().cloned());
    t
}

fn normalized_expectation(tables: &[TableFactor], term: &[Table<Expectation>], c: &Evidence) -> (f64, f64) {
    let x = total(tables, term, false, c);
    (x.p, x.s / x.p)
}

/// `∂E_Q[f] / ∂θ(x | u) = Q(x, u)/θ(x | u) · (E_{Q(·|x,u)}[f] − E_Q[f])` for
/// a chain graph, where `Z_Q` also depends on `θ`.
pub fn expectation_derivative_cg_family(
    q: &CgApproximation,
    f: &TableFactor,
    child: VarId,
    state: usize,
    parents: &[usize],
) -> Result<DerivativeReport> {
    let c = coordinate(q.structure(), q.families(), child, state, parents)?;
    let tables = cg_tables(q);
    let term = [term_of(f)];
    let (z, mean) = normalized_expectation(&tables, &term, &Evidence::new());
    let (m_xu, mean_xu) = normalized_expectation(&tables, &term, &c.xu);
    let theta = tables[c.family].values()[c.entry];
    let analytic = (m_xu / z) / theta * (mean_xu - mean);
    let numeric = central(&tables, c.family, c.entry, |t| {
        normalized_expectation(t, &term, &Evidence::new()).1
    });
    Ok(DerivativeReport::new(analytic, numeric))
}

/// `∂E_Q[f] / ∂ψ_k(c) = Q(c)/ψ_k(c) · (E_{Q(·|c)}[f] − E_Q[f])`.
pub fn expectation_derivative_cg_potential(
    q: &CgApproximation,
    f: &TableFactor,
    k: usize,
    states: &[usize],
) -> Result<DerivativeReport> {
    let pot = q.potentials().get(k).ok_or_else(|| Error::structure(format!("no potential {k}")))?;
    if states.len() != pot.vars().len()
        || states.iter().zip(pot.scope().cards()).any(|(s, c)| s >= c)
    {
        return Err(Error::invalid("bad potential assignment"));
    }
    let entry = pot.scope().index_of(states);
    let clamp = Evidence::from_pairs(pot.vars().iter().copied().zip(states.iter().copied()));
    let tables = cg_tables(q);
    let which = q.families().len() + k;
    let term = [term_of(f)];
    let (z, mean) = normalized_expectation(&tables, &term, &Evidence::new());
    let (m_c, mean_c) = normalized_expectation(&tables, &term, &clamp);
    let analytic = (m_c / z) / tables[which].values()[entry] * (mean_c - mean);
    let numeric = central(&tables, which, entry, |t| {
        normalized_expectation(t, &term, &Evidence::new()).1
    });
    Ok(DerivativeReport::new(analytic, numeric))
}
