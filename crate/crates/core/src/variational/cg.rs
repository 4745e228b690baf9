//! Chain-graph approximations: `Q(T) = (1/Z_Q) ∏_j θ(x_j | u_j) ∏_k ψ_k(C_k)`.
//!
//! Potentials are kept normalized to sum to one; any other scale would be
//! absorbed by `Z_Q`. Updates that would lower the bound are damped
//! geometrically toward the previous parameters and reverted if no damped
//! step helps.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{
    DirectedFamily, Evidence, Expectation, FactorizedModel, ModelFactor, Scope, Table,
    TableFactor,
};
use crate::rng::{flat_dirichlet, StreamRng};
use crate::variational::ascent::{self, AscentState};
use crate::variational::bn::{model_with_pins, random_families, stats_to_diagnostics};
use crate::variational::engine::{
    conditional_bound, exp_normalize_columns, potential_table, weight_table, ColumnStats, Engine,
};
use crate::variational::options::{Block, Diagnostics, FitResult, OptimizerOptions};
use crate::variational::structure::QStructure;

/// Largest bound decrease an update may cause before it is damped.
const DECREASE_TOL: f64 = 1e-9;
/// Smallest damping step tried before an update is reverted.
const MIN_STEP: f64 = 1e-3;

#[derive(Clone, Debug)]
pub struct CgApproximation {
    structure: Arc<QStructure>,
    families: Vec<DirectedFamily>,
    potentials: Vec<TableFactor>,
    log_zq: f64,
}

impl CgApproximation {
    /// Validates the parameter shapes against `structure`, normalizes the
    /// potentials and computes `log Z_Q`.
    pub fn new(
        structure: Arc<QStructure>,
        families: Vec<DirectedFamily>,
        potentials: Vec<TableFactor>,
    ) -> Result<Self> {
        if !structure.latent().is_empty() {
            return Err(Error::structure("chain-graph approximations do not support latent variables"));
        }
        let bn = crate::variational::bn::BnApproximation::new(structure.clone(), families)?;
        if potentials.len() != structure.potentials().len() {
            return Err(Error::structure(format!(
                "expected {} potentials, got {}",
                structure.potentials().len(),
                potentials.len()
            )));
        }
        let mut pots = Vec::with_capacity(potentials.len());
        for (vars, mut t) in structure.potentials().iter().zip(potentials) {
            let expected = Scope::from_domain(structure.domain(), vars)?;
            if t.scope() != &expected {
                return Err(Error::structure("potential scope does not match the structure"));
            }
            if !t.is_nonnegative() || t.normalize() <= 0.0 {
                return Err(Error::invalid("potentials must be nonnegative with positive mass"));
            }
            pots.push(t);
        }
        let mut q = CgApproximation {
            structure,
            families: bn.into_families(),
            potentials: pots,
            log_zq: 0.0,
        };
        q.refresh_log_zq();
        Ok(q)
    }

    /// Uniform families and potentials.
    pub fn uniform(structure: Arc<QStructure>) -> Result<Self> {
        let bn = crate::variational::bn::BnApproximation::uniform(structure.clone());
        let pots = uniform_potentials(&structure);
        CgApproximation::new(structure, bn.into_families(), pots)
    }

    /// Flat-Dirichlet families (as for networks), then each potential as one
    /// flat Dirichlet draw over its whole table.
    pub fn random(structure: Arc<QStructure>, rng: &mut StreamRng) -> Result<Self> {
        let families = random_families(&structure, rng);
        let pots = random_potentials(&structure, rng);
        CgApproximation::new(structure, families, pots)
    }

    pub fn structure(&self) -> &Arc<QStructure> {
        &self.structure
    }

    pub fn families(&self) -> &[DirectedFamily] {
        &self.families
    }

    pub fn potentials(&self) -> &[TableFactor] {
        &self.potentials
    }

    /// `log Z_Q` of the current parameters.
    pub fn log_zq(&self) -> f64 {
        self.log_zq
    }

    /// Replaces potential `k` (same layout) and renormalizes it.
    pub fn set_potential_values(&mut self, k: usize, values: &[f64]) -> Result<()> {
        let t = self
            .potentials
            .get_mut(k)
            .ok_or_else(|| Error::structure(format!("no potential {k}")))?;
        if values.len() != t.len() || values.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::invalid("bad potential values"));
        }
        let old = t.values().to_vec();
        t.values_mut().copy_from_slice(values);
        if t.normalize() <= 0.0 {
            t.values_mut().copy_from_slice(&old);
            return Err(Error::invalid("potential has no mass"));
        }
        self.refresh_log_zq();
        Ok(())
    }

    /// Replaces the CPT values of `child`'s family; columns are renormalized.
    pub fn set_family_values(&mut self, child: crate::model::VarId, values: &[f64]) -> Result<()> {
        let i = self
            .structure
            .family_index(child)
            .ok_or_else(|| Error::structure(format!("no family for variable {child}")))?;
        if values.len() != self.families[i].cpt().len() || values.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::invalid(format!("bad CPT values for {child}")));
        }
        self.families[i].set_values(values);
        self.refresh_log_zq();
        Ok(())
    }

    fn refresh_log_zq(&mut self) {
        let tables: Vec<TableFactor> = self
            .families
            .iter()
            .map(|f| f.cpt().clone())
            .chain(self.potentials.iter().cloned())
            .collect();
        self.log_zq = crate::exact::log_total(tables);
    }

    /// `Q` as a model over the structure's domain, observed variables pinned.
    pub fn to_model(&self) -> Result<FactorizedModel> {
        let factors = self
            .families
            .iter()
            .map(|f| ModelFactor::from(f.clone()))
            .chain(self.potentials.iter().map(|t| ModelFactor::potential(t.clone())));
        model_with_pins(&self.structure, factors)
    }
}

fn uniform_potentials(s: &QStructure) -> Vec<TableFactor> {
    s.potentials()
        .iter()
        .map(|vars| {
            let scope = Scope::from_domain(s.domain(), vars).expect("structure scopes are valid");
            let n = scope.size() as f64;
            TableFactor::filled(scope, 1.0 / n)
        })
        .collect()
}

fn random_potentials(s: &QStructure, rng: &mut StreamRng) -> Vec<TableFactor> {
    uniform_potentials(s)
        .into_iter()
        .map(|mut t| {
            let draw = flat_dirichlet(rng, t.len());
            t.values_mut().copy_from_slice(&draw);
            t
        })
        .collect()
}

/// The exact posterior `P(T | o)` of a directed target as a chain graph:
/// the target's families over the unobserved variables (observed parents
/// fixed), plus one normalized potential per observed variable over its
/// unobserved parents, proportional to the likelihood of the observation.
pub fn posterior_chain_graph(p: &FactorizedModel, ev: &Evidence) -> Result<CgApproximation> {
    if !p.is_directed() {
        return Err(Error::invalid("the posterior chain graph needs a directed target"));
    }
    ev.validate(p.domain())?;
    let mut b = QStructure::builder(p.domain(), ev);
    let mut families = Vec::new();
    let mut potentials = Vec::new();
    for f in p.factors() {
        let child = f.child.expect("directed model");
        let reduced = f.table.reduce(ev);
        let free: Vec<_> = reduced.vars().iter().copied().filter(|v| *v != child).collect();
        if ev.contains(child) {
            if free.is_empty() {
                continue;
            }
            let mut t = reduced;
            if t.normalize() <= 0.0 {
                return Err(Error::invalid("evidence has probability zero"));
            }
            b.potential(free)?;
            potentials.push(t);
        } else {
            for parent in &free {
                b.edge(*parent, child)?;
            }
            families.push(DirectedFamily::new(child, reduced, 1e-9)?);
        }
    }
    let structure = Arc::new(b.build()?);
    families.sort_by_key(|f| f.child());
    CgApproximation::new(structure, families, potentials)
}

/// Parameter block of a chain graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum CgBlock {
    Family(usize),
    Potential(usize),
}

#[derive(Clone)]
struct CgParams {
    families: Vec<DirectedFamily>,
    potentials: Vec<TableFactor>,
}

impl CgParams {
    fn factors(&self, e: &Engine, skip: Option<CgBlock>) -> Vec<Table<Expectation>> {
        let mut out = Vec::with_capacity(self.families.len() + self.potentials.len());
        for (j, f) in self.families.iter().enumerate() {
            if skip != Some(CgBlock::Family(j)) {
                out.push(weight_table(f, true));
            }
        }
        for (k, t) in self.potentials.iter().enumerate() {
            if skip != Some(CgBlock::Potential(k)) {
                out.push(potential_table(t, true));
            }
        }
        out.extend(e.terms.tables.iter().cloned());
        out
    }

    /// `(F[Q | c], log of the unnormalized mass of c)`.
    fn bound(&self, e: &Engine, c: &Evidence) -> (f64, f64) {
        let total = e.total(self.factors(e, None), c);
        (conditional_bound(total, e.terms.constant), total.p.ln())
    }

    fn values(&self, b: CgBlock) -> &[f64] {
        match b {
            CgBlock::Family(j) => self.families[j].cpt().values(),
            CgBlock::Potential(k) => self.potentials[k].values(),
        }
    }

    fn set(&mut self, b: CgBlock, values: &[f64]) {
        match b {
            CgBlock::Family(j) => self.families[j].set_values(values),
            CgBlock::Potential(k) => {
                let t = &mut self.potentials[k];
                t.values_mut().copy_from_slice(values);
                if t.normalize() <= 0.0 {
                    let n = t.len() as f64;
                    t.values_mut().iter_mut().for_each(|x| *x = 1.0 / n);
                }
            }
        }
    }

    /// Undamped stationary values of block `b`.
    fn target_values(&self, e: &Engine, b: CgBlock) -> (Vec<f64>, ColumnStats) {
        match b {
            CgBlock::Family(j) => {
                let fam = &self.families[j];
                let energies = e.query(self.factors(e, Some(b)), &Evidence::new(), fam.cpt().scope());
                let mut out = vec![0.0; fam.cpt().len()];
                let stats =
                    exp_normalize_columns(&energies, fam.cpt().values(), fam.child_card(), &mut out);
                (out, stats)
            }
            CgBlock::Potential(k) => {
                let t = &self.potentials[k];
                let energies = e.query(self.factors(e, Some(b)), &Evidence::new(), t.scope());
                normalize_potential_energies(&energies)
            }
        }
    }

    /// Applies the update of block `b` under the damping rule and returns
    /// the resulting bound.
    fn update(
        &mut self,
        e: &Engine,
        b: CgBlock,
        current: f64,
        first_step: f64,
        diag: &mut Diagnostics,
    ) -> f64 {
        let (target, stats) = self.target_values(e, b);
        diag.absorb(stats_to_diagnostics(stats));
        let old = self.values(b).to_vec();
        let mut step = first_step;
        loop {
            let candidate: Vec<f64> = if step >= 1.0 {
                target.clone()
            } else {
                old.iter().zip(&target).map(|(o, t)| o.powf(1.0 - step) * t.powf(step)).collect()
            };
            self.set(b, &candidate);
            let (bound, _) = self.bound(e, &Evidence::new());
            if bound >= current - DECREASE_TOL || current == f64::NEG_INFINITY {
                if step < 1.0 {
                    diag.damped_updates += 1;
                }
                return bound;
            }
            step /= 2.0;
            if step < MIN_STEP {
                self.set(b, &old);
                diag.reverted_updates += 1;
                return current;
            }
        }
    }
}

/// Normalizes `exp(energy)` over a whole potential table. Entries with no
/// conditioning mass get zero; if nothing is finite the table becomes uniform.
fn normalize_potential_energies(energies: &Table<Expectation>) -> (Vec<f64>, ColumnStats) {
    let mut stats = ColumnStats::default();
    let es: Vec<f64> = energies
        .values()
        .iter()
        .map(|x| if x.p > 0.0 { x.s / x.p } else { f64::NEG_INFINITY })
        .collect();
    let n = es.len();
    let m = es.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        stats.uniform_fallbacks += 1;
        return (vec![1.0 / n as f64; n], stats);
    }
    let mut out: Vec<f64> = es.iter().map(|e| (e - m).exp()).collect();
    let z: f64 = out.iter().sum();
    out.iter_mut().for_each(|x| *x /= z);
    (out, stats)
}

fn require_cg(s: &QStructure) -> Result<()> {
    if !s.latent().is_empty() {
        return Err(Error::structure("chain-graph approximations do not support latent variables"));
    }
    Ok(())
}

impl CgApproximation {
    fn params(&self) -> CgParams {
        CgParams { families: self.families.clone(), potentials: self.potentials.clone() }
    }

    fn assign(&mut self, params: CgParams) {
        self.families = params.families;
        self.potentials = params.potentials;
        self.refresh_log_zq();
    }
}

/// `F[Q | c]` for a chain graph; `-inf` when `Q` puts mass where the target has none.
pub fn evaluate_bound_cg(
    q: &CgApproximation,
    p: &FactorizedModel,
    ev: &Evidence,
    c: &Evidence,
) -> Result<f64> {
    let e = Engine::new(&q.structure, p, ev)?;
    e.check_clamp(c)?;
    Ok(q.params().bound(&e, c).0)
}

fn update_block(
    q: &mut CgApproximation,
    p: &FactorizedModel,
    ev: &Evidence,
    b: CgBlock,
) -> Result<Diagnostics> {
    let s = q.structure.clone();
    let e = Engine::new(&s, p, ev)?;
    let mut params = q.params();
    let current = params.bound(&e, &Evidence::new()).0;
    let mut diag = Diagnostics::default();
    params.update(&e, b, current, 1.0, &mut diag);
    q.assign(params);
    Ok(diag)
}

/// Coordinate update of `child`'s conditional distribution.
pub fn update_cpd_cg(
    q: &mut CgApproximation,
    p: &FactorizedModel,
    ev: &Evidence,
    child: crate::model::VarId,
) -> Result<Diagnostics> {
    let j = q
        .structure
        .family_index(child)
        .ok_or_else(|| Error::structure(format!("no family for variable {child}")))?;
    update_block(q, p, ev, CgBlock::Family(j))
}

/// Coordinate update of potential `k` (declaration order).
pub fn update_potential(
    q: &mut CgApproximation,
    p: &FactorizedModel,
    ev: &Evidence,
    k: usize,
) -> Result<Diagnostics> {
    if k >= q.potentials.len() {
        return Err(Error::structure(format!("no potential {k}")));
    }
    update_block(q, p, ev, CgBlock::Potential(k))
}

struct CgState<'e> {
    engine: &'e Engine<'e>,
    structure: Arc<QStructure>,
    params: CgParams,
    bound: f64,
    first_step: f64,
    diag: Diagnostics,
}

impl AscentState for CgState<'_> {
    type Output = CgApproximation;

    fn bound(&mut self) -> f64 {
        self.bound
    }

    fn schedule(&self) -> Vec<Block> {
        let fams = self.structure.families();
        self.structure
            .topological()
            .iter()
            .map(|&i| Block::Family(fams[i].child))
            .chain((0..self.structure.potentials().len()).map(Block::Potential))
            .collect()
    }

    fn step(&mut self, block: Block) -> Result<()> {
        let b = match block {
            Block::Family(v) => CgBlock::Family(self.structure.family_index(v).expect("scheduled")),
            Block::Potential(k) => CgBlock::Potential(k),
            _ => return Err(Error::structure("unexpected block in a chain-graph fit")),
        };
        self.bound = self.params.update(self.engine, b, self.bound, self.first_step, &mut self.diag);
        Ok(())
    }

    fn diagnostics(&self) -> Diagnostics {
        self.diag
    }

    fn output(&self) -> CgApproximation {
        let mut q = CgApproximation {
            structure: self.structure.clone(),
            families: Vec::new(),
            potentials: Vec::new(),
            log_zq: 0.0,
        };
        q.assign(self.params.clone());
        q
    }
}

/// Fits a chain-graph approximation: each sweep updates every family in
/// topological order, then every potential in declaration order.
pub fn fit_cg(
    p: &FactorizedModel,
    ev: &Evidence,
    structure: &QStructure,
    opts: &OptimizerOptions,
) -> Result<FitResult<CgApproximation>> {
    require_cg(structure)?;
    let s = Arc::new(structure.clone());
    let engine = Engine::new(&s, p, ev)?;
    ascent::run(opts, |rng| {
        let params = CgParams {
            families: random_families(&s, rng),
            potentials: random_potentials(&s, rng),
        };
        let bound = params.bound(&engine, &Evidence::new()).0;
        Ok(CgState {
            engine: &engine,
            structure: s.clone(),
            params,
            bound,
            first_step: opts.damping,
            diag: Diagnostics::default(),
        })
    })
}
