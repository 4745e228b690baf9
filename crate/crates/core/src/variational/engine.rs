//! Shared expectation machinery. Every quantity the approximations need is a
//! variable-elimination query over `Q`'s own factors, possibly combined with
//! additive log-terms (see [`Expectation`]); elimination orders are memoized
//! by the scope signature of the query.

use std::cell::{OnceCell, RefCell};
use std::collections::HashMap;
use std::rc::Rc;

use crate::error::{Error, Result};
use crate::exact::{marginal, EliminationOrder};
use crate::model::{
    DirectedFamily, Evidence, Expectation, FactorizedModel, Scope, Semiring, Table, TableFactor,
    VarId,
};
use crate::variational::relevance::{compute_relevance, RelevanceSets};
use crate::variational::structure::QStructure;

/// `log φ_i(D_i, o)` restricted to the unobserved variables, one per target
/// factor that still mentions one; fully observed factors fold into `constant`.
#[derive(Clone, Debug)]
pub(crate) struct TargetTerms {
    /// `(factor index in P, log table over D_i ∩ T)`
    pub logs: Vec<(usize, TableFactor)>,
    pub tables: Vec<Table<Expectation>>,
    /// `Σ log φ_i(o)` over fully observed factors, minus `log Z_P`.
    pub constant: f64,
}

impl TargetTerms {
    pub fn new(p: &FactorizedModel, ev: &Evidence) -> Self {
        let mut logs = Vec::new();
        let mut constant = -p.log_z();
        for (i, t) in p.tables().enumerate() {
            let r = t.reduce(ev);
            if r.scope().is_empty() {
                constant += r.values()[0].ln();
            } else {
                logs.push((i, r.ln()));
            }
        }
        let tables = logs.iter().map(|(_, t)| t.map(Expectation::term)).collect();
        TargetTerms { logs, tables, constant }
    }
}

#[derive(Default)]
pub(crate) struct PlanCache {
    orders: RefCell<HashMap<Vec<usize>, Rc<EliminationOrder>>>,
}

impl PlanCache {
    pub fn order_for<'a>(
        &self,
        scopes: impl Iterator<Item = &'a Scope> + Clone,
        keep: &[VarId],
    ) -> Rc<EliminationOrder> {
        let mut key = Vec::new();
        for s in scopes.clone() {
            key.extend(s.vars().iter().map(|v| v.index()));
            key.push(usize::MAX);
        }
        key.extend(keep.iter().map(|v| v.index()));
        if let Some(o) = self.orders.borrow().get(&key) {
            return o.clone();
        }
        let o = Rc::new(EliminationOrder::min_fill(scopes, keep));
        self.orders.borrow_mut().insert(key, o.clone());
        o
    }
}

/// Query context for one `(P, o, structure)` triple.
pub(crate) struct Engine<'a> {
    pub structure: &'a QStructure,
    pub terms: TargetTerms,
    relevance: OnceCell<RelevanceSets>,
    plans: PlanCache,
}

impl<'a> Engine<'a> {
    pub fn new(structure: &'a QStructure, p: &'a FactorizedModel, ev: &Evidence) -> Result<Self> {
        structure.check_target(p, ev)?;
        Ok(Engine {
            structure,
            terms: TargetTerms::new(p, ev),
            relevance: OnceCell::new(),
            plans: PlanCache::default(),
        })
    }

    pub fn relevance(&self) -> &RelevanceSets {
        self.relevance
            .get_or_init(|| compute_relevance(self.structure, &self.terms).expect("structure is a DAG"))
    }

    /// Marginal of the product of `factors` onto `keep` after clamping `clamp`.
    pub fn query<S: Semiring>(
        &self,
        factors: Vec<Table<S>>,
        clamp: &Evidence,
        keep: &Scope,
    ) -> Table<S> {
        let factors: Vec<Table<S>> = if clamp.is_empty() {
            factors
        } else {
            factors.into_iter().map(|f| f.reduce(clamp)).collect()
        };
        let order = self.plans.order_for(factors.iter().map(|f| f.scope()), keep.vars());
        marginal(factors, keep, Some(&order))
    }

    /// Scalar `(p, s)` of a fully eliminated query.
    pub fn total(&self, factors: Vec<Table<Expectation>>, clamp: &Evidence) -> Expectation {
        self.query(factors, clamp, &Scope::empty()).values()[0]
    }

    pub fn check_clamp(&self, c: &Evidence) -> Result<()> {
        c.validate(self.structure.domain())?;
        if let Some((v, _)) = c.iter().find(|(v, _)| self.structure.family_index(*v).is_none()) {
            return Err(Error::structure(format!(
                "conditioning variable {v} is not a variable of the approximation"
            )));
        }
        Ok(())
    }
}

/// `F[Q | c]`-style combination: `s/p + constant + log p`, with `-inf` for no support.
pub(crate) fn conditional_bound(e: Expectation, constant: f64) -> f64 {
    if e.p <= 0.0 || e.s == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    e.s / e.p + constant + e.p.ln()
}

pub(crate) fn weight_table(f: &DirectedFamily, entropic: bool) -> Table<Expectation> {
    if entropic {
        f.cpt().map(Expectation::entropic)
    } else {
        f.cpt().map(Expectation::weight)
    }
}

pub(crate) fn potential_table(t: &TableFactor, entropic: bool) -> Table<Expectation> {
    if entropic {
        t.map(Expectation::entropic)
    } else {
        t.map(Expectation::weight)
    }
}

/// Result of turning a table of energies into new column values.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct ColumnStats {
    pub uniform_fallbacks: usize,
    pub unsupported_skips: usize,
}

/// Exp-normalizes each column of `energies` (laid out like `family`'s CPT)
/// into `out`. Columns with zero conditioning mass keep their old values;
/// columns whose energies are all `-inf` become uniform.
pub(crate) fn exp_normalize_columns(
    energies: &Table<Expectation>,
    old: &[f64],
    k: usize,
    out: &mut [f64],
) -> ColumnStats {
    let mut stats = ColumnStats::default();
    for (u, col) in energies.values().chunks_exact(k).enumerate() {
        let dst = &mut out[u * k..(u + 1) * k];
        if col.iter().any(|e| e.p <= 0.0) {
            dst.copy_from_slice(&old[u * k..(u + 1) * k]);
            stats.unsupported_skips += 1;
            continue;
        }
        let es: Vec<f64> = col.iter().map(|e| e.s / e.p).collect();
        let m = es.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if m == f64::NEG_INFINITY {
            dst.iter_mut().for_each(|x| *x = 1.0 / k as f64);
            stats.uniform_fallbacks += 1;
            continue;
        }
        let mut z = 0.0;
        for (d, e) in dst.iter_mut().zip(&es) {
            *d = (e - m).exp();
            z += *d;
        }
        dst.iter_mut().for_each(|x| *x /= z);
    }
    stats
}
