mod common;

use std::time::Instant;

use chainvar::bench::*;
use chainvar::exact::log_evidence;
use chainvar::model::io::model_to_json;
use chainvar::variational::{bn, hidden::fit_hidden, Block, OptimizerOptions};
use chainvar::VarId;

fn cfg(slices: usize, vars_per_slice: usize, seed: u64) -> DbnConfig {
    DbnConfig { slices, vars_per_slice, seed }
}

#[test]
fn one_slice_network_matches_enumeration() {
    let c = cfg(1, 3, 4);
    let (p, ev) = generate_dbn(&c).unwrap();
    assert_eq!(p.domain().len(), 4);
    assert!(p.domain().ids().all(|v| p.domain().card(v) == 2));
    assert_eq!(ev.len(), 1);
    assert_eq!(ev.get(VarId(3)), Some(0));
    let brute = common::log_evidence(&p, &ev);
    assert!((log_evidence(&p, &ev) - brute).abs() < 1e-12);
}

#[test]
fn generation_is_deterministic() {
    let c = cfg(3, 4, 99);
    let (a, ea) = generate_dbn(&c).unwrap();
    let (b, eb) = generate_dbn(&c).unwrap();
    assert_eq!(model_to_json(&a, &ea), model_to_json(&b, &eb));
    let (d, ed) = generate_dbn(&cfg(3, 4, 100)).unwrap();
    assert_ne!(model_to_json(&a, &ea), model_to_json(&d, &ed));
}

#[test]
fn topology_of_generated_network() {
    let c = cfg(5, 3, 1);
    let (p, ev) = generate_dbn(&c).unwrap();
    assert_eq!(p.domain().len(), 20);
    let le = log_evidence(&p, &ev);
    assert!(le.is_finite() && le < 0.0);
    let parents_of = |v: VarId| p.family_of(v).unwrap().parents().to_vec();
    assert_eq!(parents_of(c.chain_var(0, 0)), vec![]);
    assert_eq!(parents_of(c.chain_var(0, 2)), vec![c.chain_var(0, 1)]);
    assert_eq!(parents_of(c.chain_var(3, 0)), vec![c.chain_var(2, 0)]);
    assert_eq!(parents_of(c.chain_var(3, 1)), vec![c.chain_var(2, 1), c.chain_var(3, 0)]);
    assert_eq!(parents_of(c.observed_var(2)), (0..3).map(|i| c.chain_var(2, i)).collect::<Vec<_>>());
    for n in 0..5 {
        assert_eq!(ev.get(c.observed_var(n)), Some(0));
    }
}

#[test]
fn approximating_structures() {
    let c = cfg(2, 3, 0);
    let v = build_vertical_approx(&c, 2).unwrap();
    assert_eq!(v.latent().len(), 2);
    assert_eq!(v.n_target(), 8);
    // chain variables of a slice hang off that slice's hidden variable
    let v0 = v.latent()[0];
    let v1 = v.latent()[1];
    let fam = |s: &chainvar::variational::QStructure, x: VarId| {
        s.families()[s.family_index(x).unwrap()].parents.clone()
    };
    assert_eq!(fam(&v, v1), vec![v0]);
    assert_eq!(fam(&v, c.chain_var(1, 0)), vec![v1]);
    assert_eq!(fam(&v, c.chain_var(1, 2)), vec![v1, c.chain_var(1, 1)]);

    let h = build_horizontal_approx(&c, 3).unwrap();
    assert_eq!(h.latent().len(), 3);
    let h0 = h.latent()[0];
    assert_eq!(fam(&h, c.chain_var(0, 0)), vec![h0]);
    assert_eq!(fam(&h, c.chain_var(1, 0)), vec![h0, c.chain_var(0, 0)]);
    assert_eq!(fam(&h, h.latent()[2]), vec![h.latent()[1]]);

    let m = build_mixture_approx(&c, 4).unwrap();
    assert_eq!(m.latent().len(), 1);
    assert!(build_vertical_approx(&c, 0).is_err());
}

#[test]
fn unit_hidden_variables_reduce_to_network_fits() {
    let c = cfg(3, 3, 17);
    let (p, ev) = generate_dbn(&c).unwrap();
    let opts = OptimizerOptions { restarts: 2, seed: 5, ..Default::default() };
    let n = p.domain().len();
    for s in [build_vertical_approx(&c, 1).unwrap(), build_horizontal_approx(&c, 1).unwrap()] {
        let h = fit_hidden(&p, &ev, &s, &opts).unwrap();
        let plain = s.without_trivial_latents(p.domain(), &ev).unwrap();
        let b = bn::fit(&p, &ev, &plain, &opts).unwrap();
        for (x, y) in h.restarts.iter().zip(&b.restarts) {
            let hs: Vec<_> =
                x.trace.iter().filter(|t| matches!(t.block, Block::Family(v) if v.index() < n)).collect();
            let bs: Vec<_> = y.trace.iter().filter(|t| matches!(t.block, Block::Family(_))).collect();
            assert_eq!(hs.len(), bs.len());
            for (u, w) in hs.iter().zip(bs) {
                assert_eq!((u.sweep, u.block), (w.sweep, w.block));
                assert!((u.bound - w.bound).abs() < 1e-10);
            }
        }
        assert!((h.bound - b.bound).abs() < 1e-10);
    }
}

#[test]
fn method_parsing() {
    let m: Method = "mixture:4".parse().unwrap();
    assert_eq!(m, Method { kind: MethodKind::Mixture, variant: 4 });
    assert_eq!(m.to_string(), "mixture:4");
    for bad in ["mixture", "tree:2", "vertical:0", "vertical:x"] {
        assert!(bad.parse::<Method>().is_err(), "{bad}");
    }
    assert_eq!(standard_methods().len(), 9);
}

fn small_grid(jobs: usize) -> BenchmarkConfig {
    BenchmarkConfig {
        slices: vec![2, 3],
        vars_per_slice: vec![3],
        nets_per_cell: 5,
        jobs,
        ..Default::default()
    }
}

#[test]
fn smoke_grid_is_sound_deterministic_and_fast() {
    let start = Instant::now();
    let a = run_benchmark(&small_grid(1)).unwrap();
    assert!(start.elapsed().as_secs() < 60, "smoke grid took {:?}", start.elapsed());
    assert_eq!(a.len(), 2 * 5 * 9);
    for r in &a {
        assert!(r.gap_per_slice >= -1e-9 / r.slices as f64, "{r:?}");
        assert!(r.bound.is_finite());
        assert_eq!(r.wall_ms, 0.0);
    }
    let b = run_benchmark(&small_grid(2)).unwrap();
    let mut x = Vec::new();
    let mut y = Vec::new();
    write_csv(&a, &mut x).unwrap();
    write_csv(&b, &mut y).unwrap();
    assert_eq!(x, y);
    let back = read_csv(x.as_slice()).unwrap();
    assert_eq!(back, a);
    let header = String::from_utf8(x).unwrap().lines().next().unwrap().to_string();
    assert_eq!(
        header,
        "slices,vars_per_slice,method,variant,net_index,log_evidence,bound,gap_per_slice,wall_ms"
    );
}

#[test]
fn single_mean_field_record_has_nonnegative_gap() {
    let bc = BenchmarkConfig {
        slices: vec![2],
        vars_per_slice: vec![3],
        nets_per_cell: 1,
        methods: vec![Method { kind: MethodKind::Mixture, variant: 1 }],
        ..Default::default()
    };
    let r = run_benchmark(&bc).unwrap();
    assert_eq!(r.len(), 1);
    assert!(r[0].gap_per_slice >= 0.0);
    let (p, ev) = generate_dbn(&cfg(2, 3, net_seed(0, 2, 3, 0))).unwrap();
    assert_eq!(r[0].log_evidence, log_evidence(&p, &ev));
}

#[test]
fn summary_and_plot() {
    let recs = run_benchmark(&BenchmarkConfig { nets_per_cell: 4, ..small_grid(1) }).unwrap();
    let rows = summarize(&recs);
    assert_eq!(rows.len(), 2 * 9);
    for r in &rows {
        assert_eq!(r.count, 4);
        assert!(r.p25 <= r.median && r.median <= r.p75);
    }
    let svg = render_svg(&rows, 3);
    assert_eq!(svg.matches(r#"class="panel""#).count(), 3);
    assert_eq!(svg.matches(r#"class="series""#).count(), 9);
    assert!(svg.contains("gap per slice"));
    assert_eq!(render_svg(&rows, 4).matches(r#"class="series""#).count(), 0);
}
