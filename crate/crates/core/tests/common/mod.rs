//! Fixtures and brute-force oracles shared by the integration tests. The
//! oracles walk every joint assignment and never call into the elimination
//! or enumeration code of the library.
#![allow(dead_code)]

use chainvar::model::{DirectedFamily, Domain, Evidence, FactorizedModel, Scope, TableFactor, VarId};
use chainvar::rng::{dirichlet, stream};
use rand::Rng;

/// Every assignment of `cards`, last variable fastest.
pub fn assignments(cards: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = cards.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut cur = vec![0; cards.len()];
    for _ in 0..total {
        out.push(cur.clone());
        for i in (0..cards.len()).rev() {
            cur[i] += 1;
            if cur[i] < cards[i] {
                break;
            }
            cur[i] = 0;
        }
    }
    out
}

pub fn product_at(tables: &[TableFactor], full: &[usize]) -> f64 {
    tables.iter().map(|t| t.at_full(full)).product()
}

fn cards(d: &Domain) -> Vec<usize> {
    d.ids().map(|v| d.card(v)).collect()
}

fn consistent(full: &[usize], ev: &Evidence) -> bool {
    ev.iter().all(|(v, s)| full[v.index()] == s)
}

/// `(Z, Σ_{x ⊨ ev} ∏ φ(x))` by brute force.
pub fn masses(p: &FactorizedModel, ev: &Evidence) -> (f64, f64) {
    let tables: Vec<TableFactor> = p.tables().cloned().collect();
    let (mut z, mut m) = (0.0, 0.0);
    for a in assignments(&cards(p.domain())) {
        let w = product_at(&tables, &a);
        z += w;
        if consistent(&a, ev) {
            m += w;
        }
    }
    (z, m)
}

pub fn log_evidence(p: &FactorizedModel, ev: &Evidence) -> f64 {
    let (z, m) = masses(p, ev);
    (m / z).ln()
}

/// `Q` restricted to the target domain: assignment of the first
/// `n_target` variables → probability, summing out the rest.
pub fn q_over_targets(q: &FactorizedModel, n_target: usize) -> Vec<(Vec<usize>, f64)> {
    let tables: Vec<TableFactor> = q.tables().cloned().collect();
    let cs = cards(q.domain());
    let mut acc: std::collections::BTreeMap<Vec<usize>, f64> = Default::default();
    let mut z = 0.0;
    for a in assignments(&cs) {
        let w = product_at(&tables, &a);
        z += w;
        *acc.entry(a[..n_target].to_vec()).or_default() += w;
    }
    acc.into_iter().map(|(k, v)| (k, v / z)).collect()
}

/// `E_Q[log P(x, o) − log Q(x)]` over target assignments.
pub fn bound(q: &FactorizedModel, p: &FactorizedModel, ev: &Evidence) -> f64 {
    let tables: Vec<TableFactor> = p.tables().cloned().collect();
    let (z, _) = masses(p, ev);
    let mut f = 0.0;
    for (a, qa) in q_over_targets(q, p.domain().len()) {
        if qa <= 0.0 {
            continue;
        }
        assert!(consistent(&a, ev), "Q must respect the evidence");
        let pa = product_at(&tables, &a) / z;
        if pa <= 0.0 {
            return f64::NEG_INFINITY;
        }
        f += qa * (pa.ln() - qa.ln());
    }
    f
}

/// `D(Q ‖ P(· | o))`.
pub fn kl(q: &FactorizedModel, p: &FactorizedModel, ev: &Evidence) -> f64 {
    log_evidence(p, ev) - bound(q, p, ev)
}

pub struct Fixture {
    pub p: FactorizedModel,
    pub ev: Evidence,
}

/// Random network: each variable picks up to `max_parents` parents among
/// the earlier ones; parameters are Dirichlet(½). About a third of the
/// variables (at least one) are observed.
pub fn random_fixture(seed: u64, n: usize, max_parents: usize, max_card: usize) -> Fixture {
    let mut rng = stream(seed, "fixture", 0);
    let mut domain = Domain::new();
    for i in 0..n {
        let card = rng.random_range(2..=max_card);
        domain.add(format!("x{i}"), card).unwrap();
    }
    let mut fams = Vec::new();
    for i in 0..n {
        let mut parents: Vec<VarId> = Vec::new();
        let k = rng.random_range(0..=max_parents.min(i));
        while parents.len() < k {
            let c = VarId(rng.random_range(0..i));
            if !parents.contains(&c) {
                parents.push(c);
            }
        }
        parents.sort();
        fams.push(random_family(&domain, VarId(i), &parents, &mut rng));
    }
    let p = FactorizedModel::bayesian_network(domain.clone(), fams).unwrap();
    let mut ev = Evidence::new();
    for i in 0..n {
        if rng.random_bool(0.33) {
            ev.bind(VarId(i), rng.random_range(0..domain.card(VarId(i))));
        }
    }
    if ev.is_empty() {
        let v = VarId(n - 1);
        ev.bind(v, rng.random_range(0..domain.card(v)));
    }
    if ev.len() == n {
        ev = ev.iter().skip(1).collect();
    }
    Fixture { p, ev }
}

pub fn random_family<R: Rng>(domain: &Domain, child: VarId, parents: &[VarId], rng: &mut R) -> DirectedFamily {
    let mut vars = parents.to_vec();
    vars.push(child);
    let scope = Scope::from_domain(domain, &vars).unwrap();
    let k = domain.card(child);
    let mut values = Vec::with_capacity(scope.size());
    for _ in 0..scope.size() / k {
        values.extend(dirichlet(rng, 0.5, k));
    }
    DirectedFamily::new(child, TableFactor::new(scope, values).unwrap(), 1e-9).unwrap()
}

/// The five-target network with one observation: `T1, T2, T3 → O1` and
/// `T3, T4 → T5`, binary, Dirichlet(½) parameters from `seed`. Ids:
/// T1..T5 = 0..4, O1 = 5; `O1 = 1` is observed.
pub fn figure_one(seed: u64) -> Fixture {
    let mut rng = stream(seed, "figure-one", 0);
    let domain = Domain::from_pairs((1..=5).map(|i| (format!("T{i}"), 2)).chain([("O1".to_string(), 2)])).unwrap();
    let t = |i: usize| VarId(i - 1);
    let fams = vec![
        random_family(&domain, t(1), &[], &mut rng),
        random_family(&domain, t(2), &[], &mut rng),
        random_family(&domain, t(3), &[], &mut rng),
        random_family(&domain, t(4), &[], &mut rng),
        random_family(&domain, t(5), &[t(3), t(4)], &mut rng),
        random_family(&domain, VarId(5), &[t(1), t(2), t(3)], &mut rng),
    ];
    let p = FactorizedModel::bayesian_network(domain, fams).unwrap();
    Fixture { p, ev: Evidence::from_pairs([(VarId(5), 1)]) }
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a == b) || (a - b).abs() <= tol
}

/// Joint `Q(t, v)` over the structure's whole domain (observed variables pinned),
/// with `R(t, v) = ∏ ρ` evaluated at the same assignment.
pub fn hidden_joint(h: &chainvar::variational::HiddenApproximation) -> Vec<(Vec<usize>, f64, f64)> {
    let q = h.to_model().unwrap();
    let tables: Vec<TableFactor> = q.tables().cloned().collect();
    let cs = cards(q.domain());
    assignments(&cs)
        .into_iter()
        .map(|a| {
            let w = product_at(&tables, &a);
            let r = product_at(h.rho(), &a);
            (a, w, r)
        })
        .collect()
}

/// `G[Q, R]` by enumeration over `T ∪ V` and a second copy of `V`.
pub fn g_functional(h: &chainvar::variational::HiddenApproximation, p: &FactorizedModel, ev: &Evidence) -> f64 {
    let n = p.domain().len();
    let ptables: Vec<TableFactor> = p.tables().cloned().collect();
    let (z, _) = masses(p, ev);
    let joint = hidden_joint(h);
    let mut q_t: std::collections::BTreeMap<Vec<usize>, f64> = Default::default();
    let mut r_t: std::collections::BTreeMap<Vec<usize>, f64> = Default::default();
    let mut g = 1.0;
    for (a, w, r) in &joint {
        *q_t.entry(a[..n].to_vec()).or_default() += w;
        *r_t.entry(a[..n].to_vec()).or_default() += r;
        if *w <= 0.0 {
            continue;
        }
        let pa = product_at(&ptables, &a[..n]) / z;
        if pa <= 0.0 {
            return f64::NEG_INFINITY;
        }
        g += w * (pa.ln() - w.ln() + r.ln());
    }
    for (t, qt) in &q_t {
        g -= qt * r_t[t];
    }
    g
}
