//! Randomized invariants of the factor algebra and of the approximations.

mod common;

use std::sync::Arc;

use chainvar::exact;
use chainvar::model::{Evidence, Scope, TableFactor, VarId};
use chainvar::rng::stream;
use chainvar::variational::bn::{self, BnApproximation};
use chainvar::variational::cg::{self, CgApproximation};
use chainvar::variational::QStructure;
use proptest::prelude::*;

/// Table over a subset of three variables with cardinalities 2, 3, 2.
fn table(vars: Vec<usize>) -> impl Strategy<Value = TableFactor> {
    let cards = [2usize, 3, 2];
    let size: usize = vars.iter().map(|&v| cards[v]).product();
    prop::collection::vec(0.01f64..5.0, size).prop_map(move |vals| {
        let scope = Scope::new(vars.iter().map(|&v| VarId(v)).collect(), vars.iter().map(|&v| cards[v]).collect()).unwrap();
        TableFactor::new(scope, vals).unwrap()
    })
}

fn subset() -> impl Strategy<Value = Vec<usize>> {
    prop::sample::subsequence(vec![0usize, 1, 2], 1..=3).prop_shuffle()
}

fn canonical(t: &TableFactor) -> TableFactor {
    let mut order = t.vars().to_vec();
    order.sort();
    t.permuted(&order).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn product_commutes((a, b) in (subset(), subset()).prop_flat_map(|(x, y)| (table(x), table(y)))) {
        let ab = canonical(&a.product(&b).unwrap());
        let ba = canonical(&b.product(&a).unwrap());
        prop_assert!(ab.max_abs_diff(&ba) < 1e-12);
    }

    #[test]
    fn marginalization_order_is_irrelevant(t in table(vec![2, 0, 1])) {
        let direct = canonical(&t.marginalize(&[VarId(0)]).unwrap());
        let staged = canonical(&t.sum_out(VarId(1)).sum_out(VarId(2)));
        let other = canonical(&t.sum_out(VarId(2)).sum_out(VarId(1)));
        prop_assert!(direct.max_abs_diff(&staged) < 1e-12);
        prop_assert!(direct.max_abs_diff(&other) < 1e-12);
        prop_assert!((direct.sum() - t.sum()).abs() < 1e-10 * t.sum());
    }

    #[test]
    fn elimination_matches_enumeration(seed in 0u64..10_000, n in 2usize..7) {
        let fx = common::random_fixture(seed, n, 3, 3);
        let a = exact::log_evidence(&fx.p, &fx.ev);
        let b = common::log_evidence(&fx.p, &fx.ev);
        prop_assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }

    #[test]
    fn mean_field_bound_is_sound(seed in 0u64..10_000, n in 2usize..7) {
        let fx = common::random_fixture(seed, n, 3, 3);
        let s = Arc::new(QStructure::mean_field(fx.p.domain(), &fx.ev).unwrap());
        let q = BnApproximation::random(s, &mut stream(seed, "prop", 0));
        let f = bn::evaluate_bound(&q, &fx.p, &fx.ev, &Evidence::new()).unwrap();
        prop_assert!(f <= common::log_evidence(&fx.p, &fx.ev) + 1e-9);
    }

    #[test]
    fn family_updates_stay_normalized_and_ascend(seed in 0u64..10_000, n in 2usize..7) {
        let fx = common::random_fixture(seed, n, 2, 3);
        let s = Arc::new(QStructure::mean_field(fx.p.domain(), &fx.ev).unwrap());
        let mut q = BnApproximation::random(s.clone(), &mut stream(seed, "prop", 1));
        let mut last = bn::evaluate_bound(&q, &fx.p, &fx.ev, &Evidence::new()).unwrap();
        for &i in s.topological() {
            let child = s.families()[i].child;
            bn::update_family(&mut q, &fx.p, &fx.ev, child).unwrap();
            let fam = q.family(child).unwrap();
            for col in fam.cpt().values().chunks(fam.child_card()) {
                prop_assert!((col.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
            let f = bn::evaluate_bound(&q, &fx.p, &fx.ev, &Evidence::new()).unwrap();
            prop_assert!(f >= last - 1e-9);
            last = f;
        }
    }

    #[test]
    fn potential_scale_is_irrelevant(seed in 0u64..10_000, scale in 0.01f64..100.0) {
        let fx = common::random_fixture(seed, 5, 2, 2);
        let t = fx.ev.unobserved(fx.p.domain());
        prop_assume!(t.len() >= 2);
        let mut b = QStructure::builder(fx.p.domain(), &fx.ev);
        b.potential(vec![t[0], t[1]]).unwrap();
        let s = Arc::new(b.build().unwrap());
        let q = CgApproximation::random(s, &mut stream(seed, "prop", 2)).unwrap();
        let mut scaled = q.clone();
        let vals: Vec<f64> = q.potentials()[0].values().iter().map(|v| v * scale).collect();
        scaled.set_potential_values(0, &vals).unwrap();
        let a = cg::evaluate_bound_cg(&q, &fx.p, &fx.ev, &Evidence::new()).unwrap();
        let b = cg::evaluate_bound_cg(&scaled, &fx.p, &fx.ev, &Evidence::new()).unwrap();
        prop_assert!((a - b).abs() < 1e-10);
    }
}
