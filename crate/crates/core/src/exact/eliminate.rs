//! Sum-product variable elimination over any [`Semiring`].

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::model::{Scope, Semiring, Table, VarId};

/// A sequence of variables to sum out, each exactly once.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct EliminationOrder(Vec<VarId>);

impl EliminationOrder {
    pub fn new(order: Vec<VarId>) -> Result<Self> {
        let set: BTreeSet<_> = order.iter().collect();
        if set.len() != order.len() {
            return Err(Error::structure("elimination order repeats a variable"));
        }
        Ok(EliminationOrder(order))
    }

    /// Min-fill order over the interaction graph of `scopes`, eliminating
    /// every variable not in `keep`. Ties go to the lowest id.
    pub fn min_fill<'a>(scopes: impl IntoIterator<Item = &'a Scope>, keep: &[VarId]) -> Self {
        let mut adj: BTreeMap<VarId, BTreeSet<VarId>> = BTreeMap::new();
        for s in scopes {
            for &a in s.vars() {
                let e = adj.entry(a).or_default();
                e.extend(s.vars().iter().copied().filter(|b| *b != a));
            }
        }
        let mut remaining: BTreeSet<VarId> =
            adj.keys().copied().filter(|v| !keep.contains(v)).collect();
        let mut order = Vec::with_capacity(remaining.len());
        while !remaining.is_empty() {
            let mut best: Option<(usize, VarId)> = None;
            for &v in &remaining {
                let nb: Vec<VarId> = adj[&v].iter().copied().collect();
                let mut fill = 0;
                for i in 0..nb.len() {
                    for j in i + 1..nb.len() {
                        if !adj[&nb[i]].contains(&nb[j]) {
                            fill += 1;
                        }
                    }
                }
                if best.is_none_or(|(f, _)| fill < f) {
                    best = Some((fill, v));
                    if fill == 0 {
                        break;
                    }
                }
            }
            let (_, v) = best.expect("remaining is non-empty");
            let nb: Vec<VarId> = adj.remove(&v).unwrap_or_default().into_iter().collect();
            for &a in &nb {
                let e = adj.get_mut(&a).expect("neighbour present");
                e.remove(&v);
                e.extend(nb.iter().copied().filter(|b| *b != a));
            }
            remaining.remove(&v);
            order.push(v);
        }
        EliminationOrder(order)
    }

    pub fn vars(&self) -> &[VarId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Multiplies `factors` and sums out `var` in one pass.
fn product_sum_out<S: Semiring>(factors: &[Table<S>], var: Option<VarId>) -> Table<S> {
    let mut vars: Vec<VarId> = Vec::new();
    let mut union_cards = Vec::new();
    for f in factors {
        for (&v, &c) in f.vars().iter().zip(f.scope().cards()) {
            if !vars.contains(&v) {
                vars.push(v);
                union_cards.push(c);
            }
        }
    }
    let union = Scope::new(vars, union_cards).expect("factors share cardinalities");
    let target = union.project(|v| Some(v) != var);
    let n = union.len();
    let k = factors.len();
    // strides[p][f] for scope position p and factor f; target stride last
    let mut strides = vec![0usize; n * (k + 1)];
    for (p, v) in union.vars().iter().enumerate() {
        for (fi, f) in factors.iter().enumerate() {
            strides[p * (k + 1) + fi] = f.scope().stride_or_zero(*v);
        }
        strides[p * (k + 1) + k] = target.stride_or_zero(*v);
    }
    let cards = union.cards();
    let mut idx = vec![0usize; k + 1];
    let mut state = vec![0usize; n];
    let mut out = vec![S::ZERO; target.size()];
    for _ in 0..union.size() {
        let mut val = S::ONE;
        for (fi, f) in factors.iter().enumerate() {
            val = val.mul(f.values()[idx[fi]]);
        }
        let slot = &mut out[idx[k]];
        *slot = slot.add(val);
        for p in (0..n).rev() {
            state[p] += 1;
            let row = &strides[p * (k + 1)..(p + 1) * (k + 1)];
            for (i, s) in idx.iter_mut().zip(row) {
                *i += s;
            }
            if state[p] < cards[p] {
                break;
            }
            state[p] = 0;
            for (i, s) in idx.iter_mut().zip(row) {
                *i -= cards[p] * s;
            }
        }
    }
    Table::new(target, out).expect("sizes agree")
}

/// Sums the product of `factors` over the variables of `order`, returning
/// the product of whatever remains (scope in first-appearance order).
pub fn eliminate<S: Semiring>(factors: Vec<Table<S>>, order: &EliminationOrder) -> Table<S> {
    let mut pool = factors;
    let mut with = Vec::new();
    for &v in order.vars() {
        with.extend(pool.extract_if(.., |f| f.scope().contains(v)));
        if !with.is_empty() {
            pool.push(product_sum_out(&with, Some(v)));
            with.clear();
        }
    }
    match pool.len() {
        0 => Table::unit(),
        1 => pool.pop().unwrap(),
        _ => product_sum_out(&pool, None),
    }
}

/// Marginal table over exactly `keep` (in `keep`'s order), eliminating
/// every other variable. `order` may be supplied to skip the min-fill search.
pub fn marginal<S: Semiring>(
    factors: Vec<Table<S>>,
    keep: &Scope,
    order: Option<&EliminationOrder>,
) -> Table<S> {
    let owned;
    let order = match order {
        Some(o) => o,
        None => {
            owned = EliminationOrder::min_fill(factors.iter().map(|f| f.scope()), keep.vars());
            &owned
        }
    };
    let t = eliminate(factors, order);
    if t.scope() == keep {
        return t;
    }
    // drop any stray variables (only when order did not cover them), then lay out as `keep`
    let stray: Vec<VarId> = t.vars().iter().copied().filter(|v| !keep.contains(*v)).collect();
    let mut t = t;
    for v in stray {
        t = t.sum_out(v);
    }
    t.expand_to(keep).expect("kept variables share cardinalities")
}
