//! Approximations with auxiliary variables: `Q(T, V)` is a network over the
//! unobserved targets and extra latent variables, and `Q(T) = Σ_v Q(T, v)`.
//!
//! The conditional entropy `H(V | T)` has no closed form, so the bound uses
//! `−log x ≥ −λx + log λ + 1` with `λ = R(t, v) = ∏_j ρ_j(x_j, u_j)`, a table
//! shaped like `Q` but unnormalized. The resulting functional is
//!
//! `G = E_Q[log P(T, o) − log Q(T, V) + log R(T, V)] − Σ_v E_{Q(T)}[R(T, v)] + 1 ≤ F[Q(T)]`.
//!
//! The sum over `v` in the second term runs over a second, independent copy
//! of the latent variables. Internally those copies get fresh ids past the
//! end of the domain ("shadow" ids) while target variables are shared.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exact::{enumerated_bound, joint_table, marginal};
use crate::model::{
    Domain, Evidence, Expectation, FactorizedModel, Scope, Table, TableFactor, VarId,
};
use crate::rng::StreamRng;
use crate::variational::ascent::{self, AscentState};
use crate::variational::bn::{
    apply_energies, bound_factors, family_energies, random_families, stats_to_diagnostics,
    BnApproximation, EnergyForm,
};
use crate::variational::engine::{conditional_bound, Engine};
use crate::variational::options::{Block, Diagnostics, FitResult, OptimizerOptions};
use crate::variational::structure::QStructure;

/// A network over `T ∪ V` together with the entropy-relaxation tables `ρ`,
/// one per family and laid out like its CPT.
#[derive(Clone, Debug)]
pub struct HiddenApproximation {
    q: BnApproximation,
    rho: Vec<TableFactor>,
}

impl HiddenApproximation {
    pub fn new(q: BnApproximation, rho: Vec<TableFactor>) -> Result<Self> {
        require_hidden(q.structure())?;
        if rho.len() != q.families().len() {
            return Err(Error::structure("one rho table per family is required"));
        }
        for (f, r) in q.families().iter().zip(&rho) {
            if r.scope() != f.cpt().scope() {
                return Err(Error::structure("rho table must share its family's layout"));
            }
            if r.values().iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
                return Err(Error::invalid("rho entries must be positive and finite"));
            }
        }
        Ok(HiddenApproximation { q, rho })
    }

    /// `q` with every `ρ` entry equal to one.
    pub fn with_unit_rho(q: BnApproximation) -> Result<Self> {
        let rho = unit_rho(&q);
        HiddenApproximation::new(q, rho)
    }

    pub fn random(structure: Arc<QStructure>, rng: &mut StreamRng) -> Result<Self> {
        HiddenApproximation::with_unit_rho(BnApproximation::random(structure, rng))
    }

    pub fn q(&self) -> &BnApproximation {
        &self.q
    }

    pub fn structure(&self) -> &Arc<QStructure> {
        self.q.structure()
    }

    pub fn rho(&self) -> &[TableFactor] {
        &self.rho
    }

    pub fn rho_of(&self, child: VarId) -> Option<&TableFactor> {
        self.structure().family_index(child).map(|i| &self.rho[i])
    }

    pub fn set_rho_values(&mut self, child: VarId, values: &[f64]) -> Result<()> {
        let i = self.index_of(child)?;
        let t = &mut self.rho[i];
        if values.len() != t.len() || values.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
            return Err(Error::invalid("rho entries must be positive and finite"));
        }
        t.values_mut().copy_from_slice(values);
        Ok(())
    }

    pub fn set_family_values(&mut self, child: VarId, values: &[f64]) -> Result<()> {
        self.q.set_family_values(child, values)
    }

    fn index_of(&self, child: VarId) -> Result<usize> {
        self.structure()
            .family_index(child)
            .ok_or_else(|| Error::structure(format!("no family for variable {child}")))
    }

    /// `Q(T, V)` as a model; its marginal over the target domain is `Q(T)`.
    pub fn to_model(&self) -> Result<FactorizedModel> {
        self.q.to_model()
    }

    /// `F[Q(T)]` by enumeration over `T ∪ V`; fails beyond the enumeration cap.
    pub fn marginal_bound(&self, p: &FactorizedModel, ev: &Evidence) -> Result<f64> {
        enumerated_bound(&self.to_model()?, p, ev)
    }
}

fn unit_rho(q: &BnApproximation) -> Vec<TableFactor> {
    q.families().iter().map(|f| TableFactor::filled(f.cpt().scope().clone(), 1.0)).collect()
}

fn require_hidden(s: &QStructure) -> Result<()> {
    if !s.potentials().is_empty() {
        return Err(Error::structure("hidden-variable approximations cannot carry potentials"));
    }
    Ok(())
}

/// Relabels latent variables to their shadow copies.
#[derive(Clone, Copy, Debug)]
struct Shadow {
    n_target: usize,
    n: usize,
}

impl Shadow {
    fn of(s: &QStructure) -> Self {
        Shadow { n_target: s.n_target(), n: s.domain().len() }
    }

    fn map(self, v: VarId) -> VarId {
        if v.index() >= self.n_target {
            VarId(self.n + v.index() - self.n_target)
        } else {
            v
        }
    }

    fn table(self, t: &TableFactor) -> TableFactor {
        t.relabeled(|v| self.map(v)).expect("shadow ids are distinct")
    }

    fn scope(self, s: &Scope) -> Scope {
        let vars = s.vars().iter().map(|v| self.map(*v)).collect();
        Scope::new(vars, s.cards().to_vec()).expect("shadow ids are distinct")
    }
}

/// Derived tables that change whenever `ρ` does.
#[derive(Clone)]
struct RhoCache {
    terms: Vec<Table<Expectation>>,
    shadows: Vec<TableFactor>,
}

impl RhoCache {
    fn new(shadow: Shadow, rho: &[TableFactor]) -> Self {
        RhoCache {
            terms: rho.iter().map(|r| r.map(|x| Expectation::term(x.ln()))).collect(),
            shadows: rho.iter().map(|r| shadow.table(r)).collect(),
        }
    }

    fn refresh(&mut self, shadow: Shadow, rho: &[TableFactor], j: usize) {
        self.terms[j] = rho[j].map(|x| Expectation::term(x.ln()));
        self.shadows[j] = shadow.table(&rho[j]);
    }
}

/// Real-valued factors `∏ θ ∏ ρ'` (shadowed ρ) minus the skipped entries.
fn doubled_factors(
    h: &HiddenApproximation,
    cache: &RhoCache,
    skip_cpt: Option<usize>,
    skip_rho: Option<usize>,
) -> Vec<TableFactor> {
    let mut out = Vec::with_capacity(2 * h.rho.len());
    for (k, f) in h.q.families().iter().enumerate() {
        if skip_cpt != Some(k) {
            out.push(f.cpt().clone());
        }
    }
    for (k, r) in cache.shadows.iter().enumerate() {
        if skip_rho != Some(k) {
            out.push(r.clone());
        }
    }
    out
}

fn g_value(e: &Engine, h: &HiddenApproximation, cache: &RhoCache, c: &Evidence) -> f64 {
    let total = e.total(bound_factors(e, h.q.families(), Some(&cache.terms)), c);
    if total.p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let m: f64 = e.query(doubled_factors(h, cache, None, None), c, &Scope::empty()).values()[0];
    conditional_bound(total, e.terms.constant) - m / total.p + 1.0
}

/// `G[Q, R | c]`; with `c` empty this lower-bounds `F[Q(T)]` and hence `log P(o)`.
pub fn evaluate_g(
    h: &HiddenApproximation,
    p: &FactorizedModel,
    ev: &Evidence,
    c: &Evidence,
) -> Result<f64> {
    let e = Engine::new(h.structure(), p, ev)?;
    e.check_clamp(c)?;
    let cache = RhoCache::new(Shadow::of(h.structure()), &h.rho);
    Ok(g_value(&e, h, &cache, c))
}

/// `Σ_v E_{Q(T | c)}[R(T, v)]`, or `None` when `Q(c) = 0`.
pub fn expected_r_sum(h: &HiddenApproximation, c: &Evidence) -> Result<Option<f64>> {
    let s = h.structure();
    c.validate(s.domain())?;
    if c.iter().any(|(v, _)| s.family_index(v).is_none()) {
        return Err(Error::structure("conditioning variable is not a variable of the approximation"));
    }
    let cache = RhoCache::new(Shadow::of(s), &h.rho);
    let reduce = |ts: Vec<TableFactor>| ts.into_iter().map(|t| t.reduce(c)).collect::<Vec<_>>();
    let mass: f64 = marginal(
        reduce(h.q.families().iter().map(|f| f.cpt().clone()).collect()),
        &Scope::empty(),
        None,
    )
    .values()[0];
    if mass <= 0.0 {
        return Ok(None);
    }
    let m: f64 =
        marginal(reduce(doubled_factors(h, &cache, None, None)), &Scope::empty(), None).values()[0];
    Ok(Some(m / mass))
}

fn theta_update(e: &Engine, h: &mut HiddenApproximation, cache: &RhoCache, j: usize) -> Diagnostics {
    let mut energies =
        family_energies(e, h.q.families(), j, EnergyForm::Reduced, Some(&cache.terms));
    let scope = h.q.families()[j].cpt().scope().clone();
    let m = e.query(doubled_factors(h, cache, Some(j), None), &Evidence::new(), &scope);
    for (x, mv) in energies.values_mut().iter_mut().zip(m.values()) {
        if x.p > 0.0 {
            x.s -= mv;
        }
    }
    stats_to_diagnostics(apply_energies(&mut h.q.families_mut()[j], &energies))
}

fn rho_update(
    e: &Engine,
    h: &mut HiddenApproximation,
    cache: &mut RhoCache,
    shadow: Shadow,
    j: usize,
) -> Diagnostics {
    let scope = h.q.families()[j].cpt().scope().clone();
    let cpts: Vec<TableFactor> = h.q.families().iter().map(|f| f.cpt().clone()).collect();
    let q_marg = e.query(cpts, &Evidence::new(), &scope);
    let b = e.query(doubled_factors(h, cache, None, Some(j)), &Evidence::new(), &shadow.scope(&scope));
    let mut diag = Diagnostics::default();
    for ((r, qv), bv) in h.rho[j].values_mut().iter_mut().zip(q_marg.values()).zip(b.values()) {
        let next = qv / bv;
        if *qv > 0.0 && *bv > 0.0 && next.is_finite() {
            *r = next;
        } else {
            diag.unsupported_skips += 1;
        }
    }
    cache.refresh(shadow, &h.rho, j);
    diag
}

fn engine_update(
    h: &mut HiddenApproximation,
    p: &FactorizedModel,
    ev: &Evidence,
    child: VarId,
    rho: bool,
) -> Result<Diagnostics> {
    let s = h.structure().clone();
    let e = Engine::new(&s, p, ev)?;
    let j = h.index_of(child)?;
    let shadow = Shadow::of(&s);
    let mut cache = RhoCache::new(shadow, &h.rho);
    Ok(if rho {
        rho_update(&e, h, &mut cache, shadow, j)
    } else {
        theta_update(&e, h, &cache, j)
    })
}

/// Coordinate update of `child`'s family `θ` with `ρ` held fixed.
pub fn update_theta_h(
    h: &mut HiddenApproximation,
    p: &FactorizedModel,
    ev: &Evidence,
    child: VarId,
) -> Result<Diagnostics> {
    engine_update(h, p, ev, child, false)
}

/// Closed-form maximization of `G` over `child`'s `ρ` table. The target
/// enters only through the structure check, since `ρ` does not touch `P`.
pub fn update_rho(
    h: &mut HiddenApproximation,
    p: &FactorizedModel,
    ev: &Evidence,
    child: VarId,
) -> Result<Diagnostics> {
    engine_update(h, p, ev, child, true)
}

struct HiddenState<'e> {
    engine: &'e Engine<'e>,
    shadow: Shadow,
    h: HiddenApproximation,
    cache: RhoCache,
    bound: Option<f64>,
    diag: Diagnostics,
}

impl HiddenState<'_> {
    fn rho_sweep(&self) -> Vec<Block> {
        let s = self.h.structure();
        s.topological().iter().map(|&i| Block::Rho(s.families()[i].child)).collect()
    }
}

impl AscentState for HiddenState<'_> {
    type Output = HiddenApproximation;

    fn bound(&mut self) -> f64 {
        *self.bound.get_or_insert_with(|| g_value(self.engine, &self.h, &self.cache, &Evidence::new()))
    }

    fn prelude(&self) -> Vec<Block> {
        self.rho_sweep()
    }

    fn schedule(&self) -> Vec<Block> {
        let s = self.h.structure();
        s.topological()
            .iter()
            .map(|&i| Block::Family(s.families()[i].child))
            .chain(self.rho_sweep())
            .collect()
    }

    fn step(&mut self, block: Block) -> Result<()> {
        let d = match block {
            Block::Family(v) => {
                let j = self.h.index_of(v)?;
                theta_update(self.engine, &mut self.h, &self.cache, j)
            }
            Block::Rho(v) => {
                let j = self.h.index_of(v)?;
                rho_update(self.engine, &mut self.h, &mut self.cache, self.shadow, j)
            }
            _ => return Err(Error::structure("unexpected block in a hidden-variable fit")),
        };
        self.diag.absorb(d);
        self.bound = None;
        Ok(())
    }

    fn diagnostics(&self) -> Diagnostics {
        self.diag
    }

    fn output(&self) -> HiddenApproximation {
        self.h.clone()
    }
}

/// Fits a hidden-variable approximation, maximizing `G`. Each restart
/// starts from random `θ` and unit `ρ`, runs one `ρ` sweep, then alternates
/// `θ` sweeps and `ρ` sweeps, both in topological order.
pub fn fit_hidden(
    p: &FactorizedModel,
    ev: &Evidence,
    structure: &QStructure,
    opts: &OptimizerOptions,
) -> Result<FitResult<HiddenApproximation>> {
    require_hidden(structure)?;
    let s = Arc::new(structure.clone());
    let engine = Engine::new(&s, p, ev)?;
    let shadow = Shadow::of(&s);
    ascent::run(opts, |rng| {
        let families = random_families(&s, rng);
        let h = HiddenApproximation::with_unit_rho(BnApproximation::new(s.clone(), families)?)?;
        let cache = RhoCache::new(shadow, &h.rho);
        Ok(HiddenState { engine: &engine, shadow, h, cache, bound: None, diag: Diagnostics::default() })
    })
}

/// Mixture of mean fields: one latent variable with `k` states, parent of
/// every unobserved target variable, and no other edges.
pub fn mixture_mean_field(target: &Domain, ev: &Evidence, k: usize) -> Result<QStructure> {
    if k == 0 {
        return Err(Error::structure("a mixture needs at least one component"));
    }
    let mut b = QStructure::builder(target, ev);
    let v = b.latent("mixture", k)?;
    for t in ev.unobserved(target) {
        b.edge(v, t)?;
    }
    b.build()
}

/// `F[Q(T)] = E_{Q(V)}[F[Q | V]] + I(T; V)`, both terms by enumeration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InfoDecomposition {
    pub avg_conditional_bound: f64,
    pub mutual_info: f64,
}

/// Splits the marginal bound of `h` into the average bound conditioned on
/// the latent variables and their mutual information with the targets.
pub fn info_decomposition(
    h: &HiddenApproximation,
    p: &FactorizedModel,
    ev: &Evidence,
) -> Result<InfoDecomposition> {
    let s = h.structure();
    s.check_target(p, ev)?;
    let d = s.domain();
    let targets = s.targets().to_vec();
    let latent = s.latent().to_vec();
    let mut vars = targets.clone();
    vars.extend(&latent);
    let cards = d.cards_of(&vars);
    let cpts: Vec<TableFactor> = h.q.families().iter().map(|f| f.cpt().clone()).collect();
    let joint = joint_table(&cpts, &vars, &cards)?;
    let p_tables: Vec<TableFactor> = p.tables().map(|t| t.reduce(ev)).collect();
    let p_joint = joint_table(&p_tables, &targets, &d.cards_of(&targets))?;
    let log_z = p.log_z();

    let n_t = p_joint.len();
    let n_v = joint.len() / n_t;
    let q_tv = |t: usize, v: usize| joint.values()[t * n_v + v];
    let q_t: Vec<f64> = (0..n_t).map(|t| (0..n_v).map(|v| q_tv(t, v)).sum()).collect();
    let q_v: Vec<f64> = (0..n_v).map(|v| (0..n_t).map(|t| q_tv(t, v)).sum()).collect();

    let mut avg = 0.0;
    let mut mi = 0.0;
    for v in 0..n_v {
        if q_v[v] <= 0.0 {
            continue;
        }
        let mut f_v = 0.0;
        for t in 0..n_t {
            let q = q_tv(t, v);
            if q <= 0.0 {
                continue;
            }
            let cond = q / q_v[v];
            f_v += cond * (p_joint.values()[t].ln() - log_z - cond.ln());
            mi += q * (q / (q_t[t] * q_v[v])).ln();
        }
        avg += q_v[v] * f_v;
    }
    Ok(InfoDecomposition { avg_conditional_bound: avg, mutual_info: mi.max(0.0) })
}
