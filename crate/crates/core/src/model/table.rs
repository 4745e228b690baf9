use crate::error::{Error, Result};
use crate::model::scope::Odometer;
use crate::model::semiring::Semiring;
use crate::model::{Evidence, Scope, VarId};

/// Dense table over a [`Scope`], row-major with the last variable fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Table<S> {
    scope: Scope,
    values: Vec<S>,
}

/// Nonnegative real table; the building block of CPTs and potentials.
pub type TableFactor = Table<f64>;

impl<S: Semiring> Table<S> {
    pub fn new(scope: Scope, values: Vec<S>) -> Result<Self> {
        if values.len() != scope.size() {
            return Err(Error::structure(format!(
                "table has {} values but scope has {} states",
                values.len(),
                scope.size()
            )));
        }
        Ok(Table { scope, values })
    }

    pub fn filled(scope: Scope, value: S) -> Self {
        let values = vec![value; scope.size()];
        Table { scope, values }
    }

    /// The multiplicative identity: empty scope, single value one.
    pub fn unit() -> Self {
        Table { scope: Scope::empty(), values: vec![S::ONE] }
    }

    pub fn scalar(value: S) -> Self {
        Table { scope: Scope::empty(), values: vec![value] }
    }

    pub fn scope(&self) -> &Scope {
        &self.scope
    }

    pub fn vars(&self) -> &[VarId] {
        self.scope.vars()
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [S] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<S> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at an assignment given in scope order.
    pub fn at(&self, states: &[usize]) -> S {
        self.values[self.scope.index_of(states)]
    }

    /// Value at the projection of a full assignment indexed by variable id.
    pub fn at_full(&self, full: &[usize]) -> S {
        let idx: usize = self
            .scope
            .vars()
            .iter()
            .zip(self.scope.strides())
            .map(|(v, st)| full[v.index()] * st)
            .sum();
        self.values[idx]
    }

    pub fn map<T: Semiring>(&self, f: impl Fn(S) -> T) -> Table<T> {
        Table { scope: self.scope.clone(), values: self.values.iter().map(|&x| f(x)).collect() }
    }

    /// Pointwise product over the union scope (`self`'s order, then `other`'s new variables).
    pub fn product(&self, other: &Table<S>) -> Result<Table<S>> {
        let scope = self.scope.union(other.scope())?;
        Ok(self.product_into(other, scope))
    }

    pub(crate) fn product_into(&self, other: &Table<S>, scope: Scope) -> Table<S> {
        if other.scope.is_empty() {
            let k = other.values[0];
            if scope == self.scope {
                return self.map(|x| x.mul(k));
            }
        }
        let fs: Vec<usize> = scope.vars().iter().map(|v| self.scope.stride_or_zero(*v)).collect();
        let gs: Vec<usize> = scope.vars().iter().map(|v| other.scope.stride_or_zero(*v)).collect();
        let mut values = Vec::with_capacity(scope.size());
        let mut odo = Odometer::new(scope.cards(), [fs, gs]);
        for _ in 0..scope.size() {
            values.push(self.values[odo.index[0]].mul(other.values[odo.index[1]]));
            odo.advance();
        }
        Table { scope, values }
    }

    /// Sums out every variable not in `keep`; kept variables retain `self`'s order.
    pub fn marginalize(&self, keep: &[VarId]) -> Result<Table<S>> {
        if let Some(v) = keep.iter().find(|v| !self.scope.contains(**v)) {
            return Err(Error::structure(format!("cannot keep {v}: not in factor scope")));
        }
        Ok(self.sum_to(self.scope.project(|v| keep.contains(&v))))
    }

    /// Sums out a single variable (no-op if absent).
    pub fn sum_out(&self, var: VarId) -> Table<S> {
        if !self.scope.contains(var) {
            return self.clone();
        }
        self.sum_to(self.scope.project(|v| v != var))
    }

    fn sum_to(&self, target: Scope) -> Table<S> {
        if target.len() == self.scope.len() {
            return self.clone();
        }
        let ts: Vec<usize> =
            self.scope.vars().iter().map(|v| target.stride_or_zero(*v)).collect();
        let mut values = vec![S::ZERO; target.size()];
        let mut odo = Odometer::new(self.scope.cards(), [ts]);
        for x in &self.values {
            let slot = &mut values[odo.index[0]];
            *slot = slot.add(*x);
            odo.advance();
        }
        Table { scope: target, values }
    }

    /// Sets entries inconsistent with `ev` to zero; the scope is unchanged.
    pub fn restrict(&self, ev: &Evidence) -> Table<S> {
        let bound: Vec<(usize, usize)> = self
            .scope
            .vars()
            .iter()
            .enumerate()
            .filter_map(|(i, v)| ev.get(*v).map(|s| (i, s)))
            .collect();
        if bound.is_empty() {
            return self.clone();
        }
        let mut out = self.clone();
        let cards = self.scope.cards();
        let strides = self.scope.strides();
        for (idx, val) in out.values.iter_mut().enumerate() {
            let consistent = bound.iter().all(|&(i, s)| (idx / strides[i]) % cards[i] == s);
            if !consistent {
                *val = S::ZERO;
            }
        }
        out
    }

    /// Fixes the variables bound by `ev` and drops them from the scope.
    pub fn reduce(&self, ev: &Evidence) -> Table<S> {
        let mut base = 0;
        let mut any = false;
        for (i, v) in self.scope.vars().iter().enumerate() {
            if let Some(s) = ev.get(*v) {
                base += s * self.scope.strides()[i];
                any = true;
            }
        }
        if !any {
            return self.clone();
        }
        let target = self.scope.project(|v| !ev.contains(v));
        let src: Vec<usize> =
            target.vars().iter().map(|v| self.scope.stride_or_zero(*v)).collect();
        let mut values = Vec::with_capacity(target.size());
        let mut odo = Odometer::new(target.cards(), [src]);
        for _ in 0..target.size() {
            values.push(self.values[base + odo.index[0]]);
            odo.advance();
        }
        Table { scope: target, values }
    }

    /// Same table with its variables laid out in `order` (a permutation of the scope).
    pub fn permuted(&self, order: &[VarId]) -> Result<Table<S>> {
        if order == self.scope.vars() {
            return Ok(self.clone());
        }
        let target = self.scope.permuted(order)?;
        let src: Vec<usize> =
            target.vars().iter().map(|v| self.scope.stride_or_zero(*v)).collect();
        let mut values = Vec::with_capacity(target.size());
        let mut odo = Odometer::new(target.cards(), [src]);
        for _ in 0..target.size() {
            values.push(self.values[odo.index[0]]);
            odo.advance();
        }
        Ok(Table { scope: target, values })
    }

    /// Broadcast onto a superset scope given in full.
    pub fn expand_to(&self, target: &Scope) -> Result<Table<S>> {
        for v in self.scope.vars() {
            if target.card_of(*v) != self.scope.card_of(*v) {
                return Err(Error::structure(format!("{v} missing or mismatched in target scope")));
            }
        }
        let src: Vec<usize> =
            target.vars().iter().map(|v| self.scope.stride_or_zero(*v)).collect();
        let mut values = Vec::with_capacity(target.size());
        let mut odo = Odometer::new(target.cards(), [src]);
        for _ in 0..target.size() {
            values.push(self.values[odo.index[0]]);
            odo.advance();
        }
        Ok(Table { scope: target.clone(), values })
    }

    /// Renames variables through `f`; cardinalities and layout are unchanged.
    pub fn relabeled(&self, f: impl Fn(VarId) -> VarId) -> Result<Table<S>> {
        let vars = self.scope.vars().iter().map(|v| f(*v)).collect();
        let scope = Scope::new(vars, self.scope.cards().to_vec())?;
        Ok(Table { scope, values: self.values.clone() })
    }
}

impl Table<f64> {
    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Scales the table to sum to one. Returns the previous total.
    pub fn normalize(&mut self) -> f64 {
        let z = self.sum();
        if z > 0.0 {
            for v in &mut self.values {
                *v /= z;
            }
        }
        z
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|v| *v >= 0.0 && v.is_finite())
    }

    /// Natural log of every entry (`-inf` for zeros).
    pub fn ln(&self) -> Table<f64> {
        Table { scope: self.scope.clone(), values: self.values.iter().map(|v| v.ln()).collect() }
    }

    pub fn max_abs_diff(&self, other: &Table<f64>) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| if a == b { 0.0 } else { (a - b).abs() })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scope(vars: &[usize], cards: &[usize]) -> Scope {
        Scope::new(vars.iter().map(|&v| VarId(v)).collect(), cards.to_vec()).unwrap()
    }

    fn x() -> VarId {
        VarId(0)
    }
    fn y() -> VarId {
        VarId(1)
    }

    #[test]
    fn product_with_unit_is_identity() {
        let f = TableFactor::new(scope(&[0, 1], &[2, 3]), vec![1., 2., 3., 4., 5., 6.]).unwrap();
        assert_eq!(f.product(&TableFactor::unit()).unwrap(), f);
        assert_eq!(TableFactor::unit().product(&f).unwrap().values(), f.values());
    }

    #[test]
    fn product_of_uniform_with_itself() {
        let f = TableFactor::new(scope(&[0], &[2]), vec![0.5, 0.5]).unwrap();
        assert_eq!(f.product(&f).unwrap().values(), &[0.25, 0.25]);
    }

    #[test]
    fn product_broadcasts_shared_variable() {
        let f = TableFactor::new(scope(&[0], &[2]), vec![2., 3.]).unwrap();
        let g = TableFactor::new(scope(&[0, 1], &[2, 2]), vec![1., 2., 3., 4.]).unwrap();
        let h = f.product(&g).unwrap();
        assert_eq!(h.vars(), &[x(), y()]);
        assert_eq!(h.values(), &[2., 4., 9., 12.]);
    }

    #[test]
    fn product_rejects_cardinality_mismatch() {
        let f = TableFactor::new(scope(&[0], &[2]), vec![2., 3.]).unwrap();
        let g = TableFactor::new(scope(&[0], &[3]), vec![1., 2., 3.]).unwrap();
        assert!(matches!(f.product(&g), Err(Error::Structure(_))));
    }

    #[test]
    fn marginalize_cases() {
        let f = TableFactor::new(scope(&[0, 1], &[2, 2]), vec![1., 2., 3., 4.]).unwrap();
        assert_eq!(f.marginalize(&[x(), y()]).unwrap(), f);
        assert_eq!(f.marginalize(&[x()]).unwrap().values(), &[3., 7.]);
        assert_eq!(f.marginalize(&[y()]).unwrap().values(), &[4., 6.]);
        let total = f.marginalize(&[]).unwrap();
        assert!(total.scope().is_empty());
        assert_eq!(total.values(), &[10.]);
        assert!(f.marginalize(&[VarId(7)]).is_err());
    }

    #[test]
    fn restrict_cases() {
        let f = TableFactor::new(scope(&[0], &[2]), vec![0.3, 0.7]).unwrap();
        assert_eq!(f.restrict(&Evidence::new()), f);
        assert_eq!(f.restrict(&Evidence::new().with(x(), 0)).values(), &[0.3, 0.]);
        let g = TableFactor::new(scope(&[0, 1], &[2, 2]), vec![1., 2., 3., 4.]).unwrap();
        let r = g.restrict(&Evidence::new().with(y(), 1));
        assert_eq!(r.values(), &[0., 2., 0., 4.]);
        assert_eq!(r.scope(), g.scope());
        // disjoint evidence leaves the table alone
        assert_eq!(g.restrict(&Evidence::new().with(VarId(5), 1)), g);
    }

    #[test]
    fn reduce_slices_out_bound_variables() {
        let g = TableFactor::new(scope(&[0, 1], &[2, 3]), vec![1., 2., 3., 4., 5., 6.]).unwrap();
        assert_eq!(g.reduce(&Evidence::new().with(x(), 1)).values(), &[4., 5., 6.]);
        assert_eq!(g.reduce(&Evidence::new().with(y(), 2)).values(), &[3., 6.]);
    }

    #[test]
    fn permute_and_expand() {
        let g = TableFactor::new(scope(&[0, 1], &[2, 3]), vec![1., 2., 3., 4., 5., 6.]).unwrap();
        let p = g.permuted(&[y(), x()]).unwrap();
        assert_eq!(p.values(), &[1., 4., 2., 5., 3., 6.]);
        let f = TableFactor::new(scope(&[1], &[3]), vec![1., 2., 3.]).unwrap();
        let e = f.expand_to(g.scope()).unwrap();
        assert_eq!(e.values(), &[1., 2., 3., 1., 2., 3.]);
    }
}
