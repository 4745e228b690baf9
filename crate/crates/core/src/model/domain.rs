use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Handle of a variable inside a [`Domain`]. Handles are contiguous from 0.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VarId(pub usize);

impl VarId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub id: VarId,
    pub name: String,
    pub cardinality: usize,
}

/// The ordered set of variables a model (or an approximation) is defined over.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Domain {
    vars: Vec<VariableSpec>,
    by_name: HashMap<String, VarId>,
}

impl Domain {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a domain from `(name, cardinality)` pairs; ids follow the input order.
    pub fn from_pairs<S: Into<String>>(pairs: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let mut d = Domain::new();
        for (name, card) in pairs {
            d.add(name, card)?;
        }
        Ok(d)
    }

    pub fn add(&mut self, name: impl Into<String>, cardinality: usize) -> Result<VarId> {
        let name = name.into();
        // Cardinality 1 is admitted for auxiliary variables (a one-valued hidden
        // variable is the degenerate structured approximation).
        if cardinality == 0 {
            return Err(Error::structure(format!("variable {name} has cardinality 0")));
        }
        if self.by_name.contains_key(&name) {
            return Err(Error::structure(format!("duplicate variable name {name}")));
        }
        let id = VarId(self.vars.len());
        self.by_name.insert(name.clone(), id);
        self.vars.push(VariableSpec { id, name, cardinality });
        Ok(id)
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn vars(&self) -> &[VariableSpec] {
        &self.vars
    }

    pub fn ids(&self) -> impl Iterator<Item = VarId> + '_ {
        self.vars.iter().map(|v| v.id)
    }

    pub fn get(&self, id: VarId) -> Option<&VariableSpec> {
        self.vars.get(id.0)
    }

    pub fn contains(&self, id: VarId) -> bool {
        id.0 < self.vars.len()
    }

    /// Cardinality of `id`. Panics on an unknown id.
    pub fn card(&self, id: VarId) -> usize {
        self.vars[id.0].cardinality
    }

    pub fn name(&self, id: VarId) -> &str {
        &self.vars[id.0].name
    }

    pub fn lookup(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<VarId> {
        self.lookup(name)
            .ok_or_else(|| Error::structure(format!("unknown variable {name}")))
    }

    pub fn cards_of(&self, ids: &[VarId]) -> Vec<usize> {
        ids.iter().map(|&v| self.card(v)).collect()
    }

    /// True if the first `other.len()` variables of `self` coincide with `other`.
    pub fn extends(&self, other: &Domain) -> bool {
        self.vars.len() >= other.vars.len() && self.vars[..other.vars.len()] == other.vars[..]
    }
}
