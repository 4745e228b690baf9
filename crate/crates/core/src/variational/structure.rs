//! Graph structure of an approximating distribution: directed families over
//! the unobserved target variables and any auxiliary (latent) variables,
//! plus optional undirected potentials.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dag, Domain, Evidence, FactorizedModel, VarId};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FamilySpec {
    pub child: VarId,
    pub parents: Vec<VarId>,
}

impl FamilySpec {
    /// `[parents..., child]`, the layout of the family's table.
    pub fn scope_vars(&self) -> Vec<VarId> {
        let mut v = self.parents.clone();
        v.push(self.child);
        v
    }
}

/// Fixed structure of an approximation `Q` over `T ∪ V`.
///
/// The domain is the target model's domain followed by the latent variables,
/// so target ids are shared between `P` and `Q`. Observed variables are
/// isolated nodes and carry no family.
#[derive(Clone, Debug)]
pub struct QStructure {
    domain: Domain,
    n_target: usize,
    observed: Evidence,
    targets: Vec<VarId>,
    latent: Vec<VarId>,
    families: Vec<FamilySpec>,
    potentials: Vec<Vec<VarId>>,
    dag: Dag,
    topo: Vec<usize>,
    family_index: Vec<Option<usize>>,
}

impl QStructure {
    pub fn builder(target: &Domain, ev: &Evidence) -> StructureBuilder {
        StructureBuilder::new(target, ev)
    }

    /// Fully factorized `Q` over the unobserved variables.
    pub fn mean_field(target: &Domain, ev: &Evidence) -> Result<Self> {
        StructureBuilder::new(target, ev).build()
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Number of variables of the target model (latent ids start here).
    pub fn n_target(&self) -> usize {
        self.n_target
    }

    /// Evidence the structure was built against.
    pub fn observed(&self) -> &Evidence {
        &self.observed
    }

    /// Unobserved target variables `T`, in id order.
    pub fn targets(&self) -> &[VarId] {
        &self.targets
    }

    /// Auxiliary variables `V`, in id order.
    pub fn latent(&self) -> &[VarId] {
        &self.latent
    }

    pub fn is_latent(&self, v: VarId) -> bool {
        v.index() >= self.n_target
    }

    /// One family per variable of `T ∪ V`, sorted by child id.
    pub fn families(&self) -> &[FamilySpec] {
        &self.families
    }

    pub fn potentials(&self) -> &[Vec<VarId>] {
        &self.potentials
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    /// Family indices in sweep order. Target variables follow the
    /// topological order of the target-only subgraph (lowest id first among
    /// ready nodes); every other variable is placed just before the first
    /// variable that needs it, so the result is topological for the whole
    /// graph.
    pub fn topological(&self) -> &[usize] {
        &self.topo
    }

    pub fn family_index(&self, child: VarId) -> Option<usize> {
        self.family_index.get(child.index()).copied().flatten()
    }

    pub fn has_edges(&self) -> bool {
        self.families.iter().any(|f| !f.parents.is_empty())
    }

    /// Same structure with every latent variable of cardinality one removed.
    /// Used to compare a degenerate hidden-variable approximation with its
    /// plain counterpart.
    pub fn without_trivial_latents(&self, target: &Domain, ev: &Evidence) -> Result<QStructure> {
        let mut b = StructureBuilder::new(target, ev);
        let mut remap = BTreeMap::new();
        for &v in &self.latent {
            if self.domain.card(v) > 1 {
                let nv = b.latent(self.domain.name(v), self.domain.card(v))?;
                remap.insert(v, nv);
            }
        }
        let map = |v: VarId| -> Option<VarId> {
            if self.is_latent(v) {
                remap.get(&v).copied()
            } else {
                Some(v)
            }
        };
        for f in &self.families {
            let Some(c) = map(f.child) else { continue };
            for p in &f.parents {
                if let Some(p) = map(*p) {
                    b.edge(p, c)?;
                }
            }
        }
        for pot in &self.potentials {
            let vars: Vec<VarId> = pot.iter().filter_map(|v| map(*v)).collect();
            b.potential(vars)?;
        }
        b.build()
    }

    /// Checks that this structure was built for `p` and `ev`.
    pub fn check_target(&self, p: &FactorizedModel, ev: &Evidence) -> Result<()> {
        if !self.domain.extends(p.domain()) || self.n_target != p.domain().len() {
            return Err(Error::structure("structure was built for a different target domain"));
        }
        if *ev != self.observed {
            return Err(Error::structure("structure was built for different evidence"));
        }
        Ok(())
    }
}

pub struct StructureBuilder {
    domain: Domain,
    n_target: usize,
    observed: Evidence,
    parents: BTreeMap<VarId, Vec<VarId>>,
    potentials: Vec<Vec<VarId>>,
}

impl StructureBuilder {
    pub fn new(target: &Domain, ev: &Evidence) -> Self {
        StructureBuilder {
            domain: target.clone(),
            n_target: target.len(),
            observed: ev.clone(),
            parents: BTreeMap::new(),
            potentials: Vec::new(),
        }
    }

    /// Adds an auxiliary variable (cardinality ≥ 1).
    pub fn latent(&mut self, name: &str, cardinality: usize) -> Result<VarId> {
        self.domain.add(name, cardinality)
    }

    fn check_free(&self, v: VarId) -> Result<()> {
        if !self.domain.contains(v) {
            return Err(Error::structure(format!("unknown variable {v}")));
        }
        if self.observed.contains(v) {
            return Err(Error::structure(format!(
                "observed variable {} cannot appear in the approximation",
                self.domain.name(v)
            )));
        }
        Ok(())
    }

    pub fn edge(&mut self, parent: VarId, child: VarId) -> Result<&mut Self> {
        self.check_free(parent)?;
        self.check_free(child)?;
        if parent == child {
            return Err(Error::structure(format!("self loop on {}", self.domain.name(child))));
        }
        let ps = self.parents.entry(child).or_default();
        if !ps.contains(&parent) {
            ps.push(parent);
        }
        Ok(self)
    }

    /// Adds a potential over `vars`; an empty scope is ignored.
    pub fn potential(&mut self, vars: Vec<VarId>) -> Result<&mut Self> {
        for v in &vars {
            self.check_free(*v)?;
        }
        if !vars.is_empty() {
            crate::model::Scope::from_domain(&self.domain, &vars)?;
            self.potentials.push(vars);
        }
        Ok(self)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn build(self) -> Result<QStructure> {
        let n = self.domain.len();
        let targets: Vec<VarId> =
            (0..self.n_target).map(VarId).filter(|v| !self.observed.contains(*v)).collect();
        let latent: Vec<VarId> = (self.n_target..n).map(VarId).collect();
        let mut parent_lists = vec![Vec::new(); n];
        for (c, ps) in &self.parents {
            parent_lists[c.index()] = ps.clone();
        }
        let dag = Dag::from_parents(parent_lists.clone())?;
        let mut families = Vec::new();
        let mut family_index = vec![None; n];
        for v in targets.iter().chain(&latent) {
            family_index[v.index()] = Some(families.len());
            families.push(FamilySpec { child: *v, parents: parent_lists[v.index()].clone() });
        }
        // families are sorted by child id because targets < latent
        let topo = sweep_order(&dag, self.n_target, &latent)?
            .into_iter()
            .filter_map(|v| family_index[v.index()])
            .collect();
        Ok(QStructure {
            domain: self.domain,
            n_target: self.n_target,
            observed: self.observed,
            targets,
            latent,
            families,
            potentials: self.potentials,
            dag,
            topo,
            family_index,
        })
    }
}

fn sweep_order(dag: &Dag, n_target: usize, latent: &[VarId]) -> Result<Vec<VarId>> {
    dag.topological_order()?;
    let n = dag.len();
    let mut indeg = vec![0usize; n_target];
    for v in 0..n_target {
        indeg[v] = dag.parents(VarId(v)).iter().filter(|p| p.index() < n_target).count();
    }
    let mut ready: std::collections::BTreeSet<usize> =
        (0..n_target).filter(|&v| indeg[v] == 0).collect();
    let mut priority = Vec::with_capacity(n);
    while let Some(v) = ready.pop_first() {
        priority.push(VarId(v));
        for c in dag.children(VarId(v)) {
            if c.index() < n_target {
                indeg[c.index()] -= 1;
                if indeg[c.index()] == 0 {
                    ready.insert(c.index());
                }
            }
        }
    }
    priority.extend_from_slice(latent);
    let mut rank = vec![0; n];
    for (i, v) in priority.iter().enumerate() {
        rank[v.index()] = i;
    }
    let mut emitted = vec![false; n];
    let mut out = Vec::with_capacity(n);
    for &root in &priority {
        // depth-first over parents, emitting each node after all of its parents
        let mut stack = vec![(root, false)];
        while let Some((v, expanded)) = stack.pop() {
            if emitted[v.index()] {
                continue;
            }
            if expanded {
                emitted[v.index()] = true;
                out.push(v);
                continue;
            }
            stack.push((v, true));
            let mut ps: Vec<VarId> =
                dag.parents(v).iter().copied().filter(|p| !emitted[p.index()]).collect();
            ps.sort_by_key(|p| std::cmp::Reverse(rank[p.index()]));
            stack.extend(ps.into_iter().map(|p| (p, false)));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatentEntry {
    pub name: String,
    pub cardinality: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyEntry {
    pub child: String,
    #[serde(default)]
    pub parents: Vec<String>,
}

/// JSON description of an approximating structure. Unobserved variables
/// without an entry in `families` are roots.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureFile {
    #[serde(default)]
    pub latent: Vec<LatentEntry>,
    #[serde(default)]
    pub families: Vec<FamilyEntry>,
    #[serde(default)]
    pub potentials: Vec<Vec<String>>,
}

impl StructureFile {
    pub fn build(&self, target: &Domain, ev: &Evidence) -> Result<QStructure> {
        let mut b = StructureBuilder::new(target, ev);
        for l in &self.latent {
            b.latent(&l.name, l.cardinality)?;
        }
        for f in &self.families {
            let c = b.domain().require(&f.child)?;
            for p in &f.parents {
                let p = b.domain().require(p)?;
                b.edge(p, c)?;
            }
        }
        for pot in &self.potentials {
            let vars = pot.iter().map(|n| b.domain().require(n)).collect::<Result<Vec<_>>>()?;
            b.potential(vars)?;
        }
        b.build()
    }

    pub fn from_structure(s: &QStructure) -> Self {
        let d = s.domain();
        StructureFile {
            latent: s
                .latent()
                .iter()
                .map(|v| LatentEntry { name: d.name(*v).to_string(), cardinality: d.card(*v) })
                .collect(),
            families: s
                .families()
                .iter()
                .filter(|f| !f.parents.is_empty())
                .map(|f| FamilyEntry {
                    child: d.name(f.child).to_string(),
                    parents: f.parents.iter().map(|p| d.name(*p).to_string()).collect(),
                })
                .collect(),
            potentials: s
                .potentials()
                .iter()
                .map(|p| p.iter().map(|v| d.name(*v).to_string()).collect())
                .collect(),
        }
    }
}
