use crate::error::{Error, Result};
use crate::exact;
use crate::model::family::COLUMN_TOL;
use crate::model::{Dag, DirectedFamily, Domain, TableFactor, VarId};

/// A factor of the target model: a conditional probability table for `child`
/// or an unnormalized potential.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelFactor {
    pub table: TableFactor,
    pub child: Option<VarId>,
}

impl ModelFactor {
    pub fn cpt(child: VarId, table: TableFactor) -> Self {
        ModelFactor { table, child: Some(child) }
    }

    pub fn potential(table: TableFactor) -> Self {
        ModelFactor { table, child: None }
    }
}

impl From<DirectedFamily> for ModelFactor {
    fn from(f: DirectedFamily) -> Self {
        ModelFactor::cpt(f.child(), f.cpt().clone())
    }
}

/// `P(x) = (1/Z_P) Π_i φ_i(d_i)` over a [`Domain`].
#[derive(Clone, Debug)]
pub struct FactorizedModel {
    domain: Domain,
    factors: Vec<ModelFactor>,
    directed: bool,
    log_z: f64,
}

impl FactorizedModel {
    /// Validates scopes against the domain. The model is directed when every
    /// variable has exactly one CPT and the child→parents relation is
    /// acyclic; `log Z_P` is 0 then, and computed by elimination otherwise.
    pub fn new(domain: Domain, factors: Vec<ModelFactor>) -> Result<Self> {
        Self::with_tolerance(domain, factors, COLUMN_TOL)
    }

    pub(crate) fn with_tolerance(
        domain: Domain,
        factors: Vec<ModelFactor>,
        tol: f64,
    ) -> Result<Self> {
        for (i, f) in factors.iter().enumerate() {
            for (v, c) in f.table.vars().iter().zip(f.table.scope().cards()) {
                let spec = domain
                    .get(*v)
                    .ok_or_else(|| Error::structure(format!("factor {i} uses unknown variable {v}")))?;
                if spec.cardinality != *c {
                    return Err(Error::structure(format!(
                        "factor {i}: cardinality of {} is {} but domain says {}",
                        spec.name, c, spec.cardinality
                    )));
                }
            }
            if !f.table.is_nonnegative() {
                return Err(Error::invalid(format!("factor {i} has negative or non-finite entries")));
            }
        }
        let mut factors = factors;
        let mut cpt_count = vec![0usize; domain.len()];
        for f in factors.iter_mut() {
            if let Some(child) = f.child {
                if !f.table.scope().contains(child) {
                    return Err(Error::structure(format!("CPT child {child} not in its scope")));
                }
                cpt_count[child.index()] += 1;
                // check columns in the canonical [parents..., child] layout,
                // then store the exactly renormalized values back
                let mut order: Vec<VarId> =
                    f.table.vars().iter().copied().filter(|v| *v != child).collect();
                order.push(child);
                let canon = f.table.permuted(&order)?;
                let fam = DirectedFamily::new(child, canon, tol)?;
                f.table = fam.cpt().permuted(f.table.vars())?;
            }
        }
        let all_cpt = factors.iter().all(|f| f.child.is_some());
        let directed = all_cpt && cpt_count.iter().all(|&c| c == 1);
        if all_cpt && !directed {
            if let Some(v) = cpt_count.iter().position(|&c| c > 1) {
                return Err(Error::structure(format!(
                    "variable {} has more than one CPT",
                    domain.name(VarId(v))
                )));
            }
        }
        let mut model = FactorizedModel { domain, factors, directed, log_z: 0.0 };
        if directed {
            model.dag()?;
        } else {
            model.log_z = exact::log_total(model.tables().cloned().collect());
        }
        Ok(model)
    }

    pub fn bayesian_network(domain: Domain, families: Vec<DirectedFamily>) -> Result<Self> {
        let m = Self::new(domain, families.into_iter().map(ModelFactor::from).collect())?;
        if !m.directed {
            return Err(Error::structure("families do not cover every variable exactly once"));
        }
        Ok(m)
    }

    pub fn markov(domain: Domain, potentials: Vec<TableFactor>) -> Result<Self> {
        Self::new(domain, potentials.into_iter().map(ModelFactor::potential).collect())
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn factors(&self) -> &[ModelFactor] {
        &self.factors
    }

    pub fn tables(&self) -> impl Iterator<Item = &TableFactor> + Clone {
        self.factors.iter().map(|f| &f.table)
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    /// Cached `log Z_P` (0 for directed models).
    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    /// Directed graph induced by the CPTs.
    pub fn dag(&self) -> Result<Dag> {
        let mut parents = vec![Vec::new(); self.domain.len()];
        for f in &self.factors {
            if let Some(child) = f.child {
                parents[child.index()] =
                    f.table.vars().iter().copied().filter(|v| *v != child).collect();
            }
        }
        Dag::from_parents(parents)
    }

    /// Parents of `v` according to its CPT (empty for potentials or roots).
    pub fn parents_of(&self, v: VarId) -> Vec<VarId> {
        self.factors
            .iter()
            .find(|f| f.child == Some(v))
            .map(|f| f.table.vars().iter().copied().filter(|u| *u != v).collect())
            .unwrap_or_default()
    }

    /// The CPT of `v` as a family over `[parents..., v]`.
    pub fn family_of(&self, v: VarId) -> Option<DirectedFamily> {
        let f = self.factors.iter().find(|f| f.child == Some(v))?;
        let mut order = self.parents_of(v);
        order.push(v);
        let t = f.table.permuted(&order).ok()?;
        DirectedFamily::new(v, t, 1e-9).ok()
    }

    /// Whether `x` is d-separated from every variable of `y` given `z`.
    pub fn d_separated(&self, x: VarId, y: &[VarId], z: &[VarId]) -> Result<bool> {
        if !self.directed {
            return Err(Error::structure("d-separation requires a directed model"));
        }
        self.dag()?.d_separated(x, y, z)
    }
}
