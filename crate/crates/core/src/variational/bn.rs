//! Bayesian-network approximations: `Q(T) = ∏_j θ(x_j | u_j)`.
//!
//! Mean field is the edge-free special case. Every family update sets each
//! column of `θ_j` to the exp-normalized conditional expectation of the
//! log-joint terms that can still depend on `x_j` once `u_j` is fixed.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{
    DirectedFamily, Evidence, Expectation, FactorizedModel, ModelFactor, Scope, Table,
    TableFactor, VarId,
};
use crate::rng::{flat_dirichlet, StreamRng};
use crate::variational::ascent::{self, AscentState};
use crate::variational::engine::{
    conditional_bound, exp_normalize_columns, weight_table, ColumnStats, Engine,
};
use crate::variational::options::{Block, Diagnostics, FitResult, OptimizerOptions};
use crate::variational::relevance::RelevanceSets;
use crate::variational::structure::QStructure;

/// A fitted or hand-built network over the variables of a [`QStructure`].
#[derive(Clone, Debug)]
pub struct BnApproximation {
    structure: Arc<QStructure>,
    families: Vec<DirectedFamily>,
}

impl BnApproximation {
    /// Checks that `families` match the structure's families one to one.
    pub fn new(structure: Arc<QStructure>, families: Vec<DirectedFamily>) -> Result<Self> {
        let specs = structure.families();
        if specs.len() != families.len() {
            return Err(Error::structure(format!(
                "expected {} families, got {}",
                specs.len(),
                families.len()
            )));
        }
        for (spec, fam) in specs.iter().zip(&families) {
            let expected = Scope::from_domain(structure.domain(), &spec.scope_vars())?;
            if fam.child() != spec.child || fam.cpt().scope() != &expected {
                return Err(Error::structure(format!(
                    "family of {} does not match the structure",
                    structure.domain().name(spec.child)
                )));
            }
        }
        Ok(BnApproximation { structure, families })
    }

    pub fn uniform(structure: Arc<QStructure>) -> Self {
        let families = structure
            .families()
            .iter()
            .map(|f| {
                DirectedFamily::uniform(structure.domain(), f.child, &f.parents)
                    .expect("structure scopes are valid")
            })
            .collect();
        BnApproximation { structure, families }
    }

    /// Every column drawn from a flat Dirichlet, families in child-id order.
    pub fn random(structure: Arc<QStructure>, rng: &mut StreamRng) -> Self {
        let families = random_families(&structure, rng);
        BnApproximation { structure, families }
    }

    pub fn structure(&self) -> &Arc<QStructure> {
        &self.structure
    }

    pub fn families(&self) -> &[DirectedFamily] {
        &self.families
    }

    pub fn family(&self, child: VarId) -> Option<&DirectedFamily> {
        self.structure.family_index(child).map(|i| &self.families[i])
    }

    /// Replaces the CPT values of `child`'s family (same layout); columns are renormalized.
    pub fn set_family_values(&mut self, child: VarId, values: &[f64]) -> Result<()> {
        let i = self.index_of(child)?;
        if values.len() != self.families[i].cpt().len() || values.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::invalid(format!("bad CPT values for {child}")));
        }
        self.families[i].set_values(values);
        Ok(())
    }

    fn index_of(&self, child: VarId) -> Result<usize> {
        self.structure
            .family_index(child)
            .ok_or_else(|| Error::structure(format!("no family for variable {child}")))
    }

    /// `Q` as a directed model over the structure's whole domain, with each
    /// observed variable pinned to its observed state.
    pub fn to_model(&self) -> Result<FactorizedModel> {
        model_with_pins(&self.structure, self.families.iter().map(|f| ModelFactor::from(f.clone())))
    }

    pub(crate) fn families_mut(&mut self) -> &mut [DirectedFamily] {
        &mut self.families
    }

    pub(crate) fn into_families(self) -> Vec<DirectedFamily> {
        self.families
    }
}

pub(crate) fn random_families(s: &QStructure, rng: &mut StreamRng) -> Vec<DirectedFamily> {
    s.families()
        .iter()
        .map(|f| {
            let mut fam = DirectedFamily::uniform(s.domain(), f.child, &f.parents)
                .expect("structure scopes are valid");
            let k = fam.child_card();
            for u in 0..fam.n_columns() {
                let col = flat_dirichlet(rng, k);
                fam.set_column(u, &col);
            }
            fam.renormalize();
            fam
        })
        .collect()
}

/// Builds a model from `factors` plus a point-mass CPT for every observed variable.
pub(crate) fn model_with_pins(
    s: &QStructure,
    factors: impl Iterator<Item = ModelFactor>,
) -> Result<FactorizedModel> {
    let mut all: Vec<ModelFactor> = factors.collect();
    for (v, state) in s.observed().iter() {
        let scope = Scope::from_domain(s.domain(), &[v])?;
        let mut t = TableFactor::filled(scope, 0.0);
        t.values_mut()[state] = 1.0;
        all.push(ModelFactor::cpt(v, t));
    }
    FactorizedModel::new(s.domain().clone(), all)
}

/// Which terms enter a family's energy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum EnergyForm {
    /// Only the relevance sets, over the ancestral closure they need.
    Reduced,
    /// Every term of the bound.
    Full,
}

/// Factors whose product, summed with `(x_j, u_j)` kept, gives
/// `(Q(u_j), Q(u_j) · energy)` for family `j`. `family_terms[k]`, when given,
/// is an extra additive term attached to family `k`.
pub(crate) fn energy_factors(
    e: &Engine,
    fams: &[DirectedFamily],
    j: usize,
    form: EnergyForm,
    family_terms: Option<&[Table<Expectation>]>,
) -> Vec<Table<Expectation>> {
    let mut out = Vec::new();
    match form {
        EnergyForm::Full => {
            for (k, f) in fams.iter().enumerate() {
                if k != j {
                    out.push(weight_table(f, true));
                }
            }
            out.extend(e.terms.tables.iter().cloned());
            if let Some(ft) = family_terms {
                out.extend(ft.iter().cloned());
            }
        }
        EnergyForm::Reduced => {
            let rel: &RelevanceSets = e.relevance();
            let mut entropic = vec![false; fams.len()];
            let mut seeds: Vec<VarId> = fams[j].cpt().vars().to_vec();
            for &k in &rel.fq[j] {
                entropic[k] = true;
                seeds.extend_from_slice(fams[k].cpt().vars());
            }
            for &pos in &rel.fp_terms[j] {
                seeds.extend_from_slice(e.terms.tables[pos].vars());
            }
            let needed = e.structure.dag().ancestral_mask(seeds);
            for (k, f) in fams.iter().enumerate() {
                if k != j && needed[f.child().index()] {
                    out.push(weight_table(f, entropic[k]));
                }
            }
            for &pos in &rel.fp_terms[j] {
                out.push(e.terms.tables[pos].clone());
            }
            if let Some(ft) = family_terms {
                for &k in rel.fq[j].iter().chain(std::iter::once(&j)) {
                    out.push(ft[k].clone());
                }
            }
        }
    }
    out
}

/// Energies of family `j`, laid out like its CPT.
pub(crate) fn family_energies(
    e: &Engine,
    fams: &[DirectedFamily],
    j: usize,
    form: EnergyForm,
    family_terms: Option<&[Table<Expectation>]>,
) -> Table<Expectation> {
    let factors = energy_factors(e, fams, j, form, family_terms);
    e.query(factors, &Evidence::new(), fams[j].cpt().scope())
}

/// Replaces family `j`'s columns with the exp-normalized energies.
pub(crate) fn apply_energies(fam: &mut DirectedFamily, energies: &Table<Expectation>) -> ColumnStats {
    let mut values = vec![0.0; fam.cpt().len()];
    let stats = exp_normalize_columns(energies, fam.cpt().values(), fam.child_card(), &mut values);
    fam.set_values(&values);
    stats
}

pub(crate) fn stats_to_diagnostics(s: ColumnStats) -> Diagnostics {
    Diagnostics {
        uniform_fallbacks: s.uniform_fallbacks,
        unsupported_skips: s.unsupported_skips,
        ..Default::default()
    }
}

/// Factors of the full bound query: entropic families, target terms and extras.
pub(crate) fn bound_factors(
    e: &Engine,
    fams: &[DirectedFamily],
    family_terms: Option<&[Table<Expectation>]>,
) -> Vec<Table<Expectation>> {
    let mut out: Vec<Table<Expectation>> = fams.iter().map(|f| weight_table(f, true)).collect();
    out.extend(e.terms.tables.iter().cloned());
    if let Some(ft) = family_terms {
        out.extend(ft.iter().cloned());
    }
    out
}

pub(crate) fn bn_bound(e: &Engine, fams: &[DirectedFamily], c: &Evidence) -> f64 {
    conditional_bound(e.total(bound_factors(e, fams, None), c), e.terms.constant)
}

fn require_bn(s: &QStructure) -> Result<()> {
    if !s.potentials().is_empty() {
        return Err(Error::structure(
            "a Bayesian-network approximation cannot carry potentials",
        ));
    }
    Ok(())
}

/// `F[Q | c]`: the bound conditioned on a partial assignment `c` of `Q`'s
/// variables. With `c` empty this is the lower bound on `log P(o)`; it is
/// `-inf` when `Q` puts mass where the target has none.
pub fn evaluate_bound(
    q: &BnApproximation,
    p: &FactorizedModel,
    ev: &Evidence,
    c: &Evidence,
) -> Result<f64> {
    let e = Engine::new(&q.structure, p, ev)?;
    e.check_clamp(c)?;
    Ok(bn_bound(&e, &q.families, c))
}

fn energy_at(
    q: &BnApproximation,
    p: &FactorizedModel,
    ev: &Evidence,
    child: VarId,
    state: usize,
    parents: &[usize],
    form: EnergyForm,
) -> Result<Option<f64>> {
    let e = Engine::new(&q.structure, p, ev)?;
    let j = q.index_of(child)?;
    let fam = &q.families[j];
    if parents.len() != fam.parents().len() {
        return Err(Error::invalid("parent assignment has the wrong length"));
    }
    let mut states = parents.to_vec();
    states.push(state);
    for (s, c) in states.iter().zip(fam.cpt().scope().cards()) {
        if s >= c {
            return Err(Error::invalid("state out of range"));
        }
    }
    let t = family_energies(&e, &q.families, j, form, None);
    Ok(t.at(&states).mean())
}

/// Reduced energy of `child = state` given its parents' states: the
/// conditional expectation of the relevant log-terms. `None` when the
/// parent configuration has probability zero under `Q`.
pub fn energy_bn(
    q: &BnApproximation,
    p: &FactorizedModel,
    ev: &Evidence,
    child: VarId,
    state: usize,
    parents: &[usize],
) -> Result<Option<f64>> {
    energy_at(q, p, ev, child, state, parents, EnergyForm::Reduced)
}

/// Energy with every term of the bound; differs from [`energy_bn`] by a
/// constant per parent configuration.
pub fn energy_bn_full(
    q: &BnApproximation,
    p: &FactorizedModel,
    ev: &Evidence,
    child: VarId,
    state: usize,
    parents: &[usize],
) -> Result<Option<f64>> {
    energy_at(q, p, ev, child, state, parents, EnergyForm::Full)
}

fn update_with(
    q: &mut BnApproximation,
    p: &FactorizedModel,
    ev: &Evidence,
    child: VarId,
    form: EnergyForm,
) -> Result<Diagnostics> {
    require_bn(&q.structure)?;
    let s = q.structure.clone();
    let e = Engine::new(&s, p, ev)?;
    let j = q.index_of(child)?;
    let energies = family_energies(&e, &q.families, j, form, None);
    Ok(stats_to_diagnostics(apply_energies(&mut q.families[j], &energies)))
}

/// Coordinate update of `child`'s family.
pub fn update_family(
    q: &mut BnApproximation,
    p: &FactorizedModel,
    ev: &Evidence,
    child: VarId,
) -> Result<Diagnostics> {
    update_with(q, p, ev, child, EnergyForm::Reduced)
}

/// The same update computed from every term of the bound instead of the relevance sets.
pub fn update_family_full(
    q: &mut BnApproximation,
    p: &FactorizedModel,
    ev: &Evidence,
    child: VarId,
) -> Result<Diagnostics> {
    update_with(q, p, ev, child, EnergyForm::Full)
}

/// Relevance sets of `q`'s structure with respect to `p` and `ev`.
pub fn relevance_sets(
    q: &BnApproximation,
    p: &FactorizedModel,
    ev: &Evidence,
) -> Result<RelevanceSets> {
    crate::variational::relevance::relevance_sets(&q.structure, p, ev)
}

struct BnState<'e> {
    engine: &'e Engine<'e>,
    structure: Arc<QStructure>,
    families: Vec<DirectedFamily>,
    bound: Option<f64>,
    diag: Diagnostics,
}

impl AscentState for BnState<'_> {
    type Output = BnApproximation;

    fn bound(&mut self) -> f64 {
        *self.bound.get_or_insert_with(|| bn_bound(self.engine, &self.families, &Evidence::new()))
    }

    fn schedule(&self) -> Vec<Block> {
        let fams = self.structure.families();
        self.structure.topological().iter().map(|&i| Block::Family(fams[i].child)).collect()
    }

    fn step(&mut self, block: Block) -> Result<()> {
        let Block::Family(child) = block else {
            return Err(Error::structure("unexpected block in a network fit"));
        };
        let j = self.structure.family_index(child).expect("scheduled family");
        let energies = family_energies(self.engine, &self.families, j, EnergyForm::Reduced, None);
        let stats = apply_energies(&mut self.families[j], &energies);
        self.diag.absorb(stats_to_diagnostics(stats));
        self.bound = None;
        Ok(())
    }

    fn diagnostics(&self) -> Diagnostics {
        self.diag
    }

    fn output(&self) -> BnApproximation {
        BnApproximation { structure: self.structure.clone(), families: self.families.clone() }
    }
}

/// Fits a network approximation with the given structure by coordinate
/// ascent from `opts.restarts` random starting points.
pub fn fit(
    p: &FactorizedModel,
    ev: &Evidence,
    structure: &QStructure,
    opts: &OptimizerOptions,
) -> Result<FitResult<BnApproximation>> {
    require_bn(structure)?;
    let s = Arc::new(structure.clone());
    let engine = Engine::new(&s, p, ev)?;
    ascent::run(opts, |rng| {
        Ok(BnState {
            engine: &engine,
            structure: s.clone(),
            families: random_families(&s, rng),
            bound: None,
            diag: Diagnostics::default(),
        })
    })
}
