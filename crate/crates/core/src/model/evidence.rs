use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{Domain, VarId};

/// Observed values for a subset of variables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Evidence {
    bindings: BTreeMap<VarId, usize>,
}

impl Evidence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (VarId, usize)>) -> Self {
        Evidence { bindings: pairs.into_iter().collect() }
    }

    pub fn bind(&mut self, var: VarId, state: usize) -> &mut Self {
        self.bindings.insert(var, state);
        self
    }

    pub fn with(mut self, var: VarId, state: usize) -> Self {
        self.bindings.insert(var, state);
        self
    }

    pub fn get(&self, var: VarId) -> Option<usize> {
        self.bindings.get(&var).copied()
    }

    pub fn contains(&self, var: VarId) -> bool {
        self.bindings.contains_key(&var)
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, usize)> + '_ {
        self.bindings.iter().map(|(&v, &s)| (v, s))
    }

    pub fn vars(&self) -> Vec<VarId> {
        self.bindings.keys().copied().collect()
    }

    /// Union of two evidence sets; `other` wins on conflicts.
    pub fn merged(&self, other: &Evidence) -> Evidence {
        let mut out = self.clone();
        out.bindings.extend(other.iter());
        out
    }

    pub fn validate(&self, domain: &Domain) -> Result<()> {
        for (v, s) in self.iter() {
            let spec = domain
                .get(v)
                .ok_or_else(|| Error::structure(format!("evidence on unknown variable {v}")))?;
            if s >= spec.cardinality {
                return Err(Error::invalid(format!(
                    "evidence {}={} out of range (cardinality {})",
                    spec.name, s, spec.cardinality
                )));
            }
        }
        Ok(())
    }

    /// Unobserved variables of `domain`, in id order.
    pub fn unobserved(&self, domain: &Domain) -> Vec<VarId> {
        domain.ids().filter(|v| !self.contains(*v)).collect()
    }
}

impl FromIterator<(VarId, usize)> for Evidence {
    fn from_iter<I: IntoIterator<Item = (VarId, usize)>>(iter: I) -> Self {
        Evidence::from_pairs(iter)
    }
}
