use crate::error::{Error, Result};
use crate::model::{Domain, Scope, TableFactor, VarId};

/// Tolerance on column sums of a conditional probability table.
pub const COLUMN_TOL: f64 = 1e-12;

/// A conditional distribution `P(child | parents)` stored as a table over
/// `[parents..., child]`, so each parent configuration owns a contiguous column.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectedFamily {
    child: VarId,
    parents: Vec<VarId>,
    cpt: TableFactor,
}

impl DirectedFamily {
    /// Wraps a CPT whose scope must be `[parents..., child]`. Columns are
    /// checked against `tol` and then renormalized exactly.
    pub fn new(child: VarId, cpt: TableFactor, tol: f64) -> Result<Self> {
        let vars = cpt.vars();
        if vars.last() != Some(&child) {
            return Err(Error::structure(format!("CPT scope must end with its child {child}")));
        }
        let parents = vars[..vars.len() - 1].to_vec();
        let mut fam = DirectedFamily { child, parents, cpt };
        if !fam.cpt.is_nonnegative() {
            return Err(Error::invalid(format!("CPT of {child} has negative or non-finite entries")));
        }
        for (u, col) in fam.columns().enumerate() {
            let s: f64 = col.iter().sum();
            if (s - 1.0).abs() > tol {
                return Err(Error::invalid(format!(
                    "CPT of {child}: column {u} sums to {s}, not 1"
                )));
            }
        }
        fam.renormalize();
        Ok(fam)
    }

    /// Family with every column uniform.
    pub fn uniform(domain: &Domain, child: VarId, parents: &[VarId]) -> Result<Self> {
        let mut vars = parents.to_vec();
        vars.push(child);
        let scope = Scope::from_domain(domain, &vars)?;
        let k = domain.card(child) as f64;
        let cpt = TableFactor::filled(scope, 1.0 / k);
        DirectedFamily::new(child, cpt, COLUMN_TOL)
    }

    pub fn child(&self) -> VarId {
        self.child
    }

    pub fn parents(&self) -> &[VarId] {
        &self.parents
    }

    pub fn cpt(&self) -> &TableFactor {
        &self.cpt
    }

    pub fn child_card(&self) -> usize {
        *self.cpt.scope().cards().last().unwrap()
    }

    /// Number of parent configurations.
    pub fn n_columns(&self) -> usize {
        self.cpt.len() / self.child_card()
    }

    pub fn columns(&self) -> std::slice::ChunksExact<'_, f64> {
        self.cpt.values().chunks_exact(self.child_card())
    }

    pub fn column(&self, u: usize) -> &[f64] {
        let k = self.child_card();
        &self.cpt.values()[u * k..(u + 1) * k]
    }

    /// Replaces column `u`; the caller supplies a distribution.
    pub fn set_column(&mut self, u: usize, col: &[f64]) {
        let k = self.child_card();
        self.cpt.values_mut()[u * k..(u + 1) * k].copy_from_slice(col);
    }

    /// Replaces all values (same layout); columns are renormalized.
    pub fn set_values(&mut self, values: &[f64]) {
        self.cpt.values_mut().copy_from_slice(values);
        self.renormalize();
    }

    pub fn renormalize(&mut self) {
        let k = self.child_card();
        for col in self.cpt.values_mut().chunks_exact_mut(k) {
            let s: f64 = col.iter().sum();
            if s > 0.0 {
                col.iter_mut().for_each(|x| *x /= s);
            } else {
                col.iter_mut().for_each(|x| *x = 1.0 / k as f64);
            }
        }
    }

    /// Largest deviation of a column sum from one.
    pub fn max_column_error(&self) -> f64 {
        self.columns().map(|c| (c.iter().sum::<f64>() - 1.0).abs()).fold(0.0, f64::max)
    }
}
