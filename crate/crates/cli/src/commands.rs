use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chainvar::bench::{
    generate_dbn, read_csv, render_svg, run_benchmark, standard_methods, summarize, write_csv,
    BenchmarkConfig, DbnConfig,
};
use chainvar::exact::{log_evidence, posterior_marginal};
use chainvar::model::io::{model_to_json, parse_evidence, read_model};
use chainvar::variational::{
    bn, cg, hidden, Diagnostics, OptimizerOptions, QStructure, StructureFile, TraceStep,
};
use chainvar::{DirectedFamily, Domain, Evidence, FactorizedModel, TableFactor};
use serde::Serialize;

use crate::args::{BenchmarkArgs, Command, ExactArgs, FitArgs, FitMethod, GenerateArgs, PlotArgs};
use crate::manifest::{manifest_path, Manifest};
use crate::Failure;

/// 17 significant digits.
pub fn sig17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

pub struct Ctx<'a> {
    pub argv: &'a [String],
    pub command: &'a Command,
}

impl Ctx<'_> {
    fn record(&self, inputs: &[&Path], outputs: Vec<PathBuf>, manifest: &Path) -> Result<()> {
        Manifest::new(self.argv, self.command, inputs, outputs)?.write(manifest)
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn load(model: &Path, evidence: Option<&str>) -> Result<(FactorizedModel, Evidence)> {
    let (p, file_ev) =
        read_model(model).with_context(|| format!("reading model {}", model.display()))?;
    let ev = match evidence {
        Some(spec) => file_ev.merged(&parse_evidence(p.domain(), spec)?),
        None => file_ev,
    };
    Ok((p, ev))
}

pub fn generate(ctx: &Ctx, a: &GenerateArgs) -> Result<()> {
    let cfg = DbnConfig { slices: a.slices, vars_per_slice: a.vars_per_slice, seed: a.seed };
    let (p, ev) = generate_dbn(&cfg)?;
    write_file(&a.out, model_to_json(&p, &ev).as_bytes())?;
    ctx.record(&[], vec![a.out.clone()], &manifest_path(&a.out))
}

pub fn exact(ctx: &Ctx, a: &ExactArgs) -> Result<()> {
    let (p, ev) = load(&a.model, a.evidence.as_deref())?;
    let d = p.domain();
    let mut report = format!("log_evidence\t{}\n", sig17(log_evidence(&p, &ev)));
    for name in &a.marginals {
        let v = d.require(name)?;
        match (ev.get(v), posterior_marginal(&p, &ev, &[v])?) {
            (Some(s), _) => report.push_str(&format!("{name}\tobserved\t{s}\n")),
            (None, None) => report.push_str(&format!("{name}\tunsupported\n")),
            (None, Some(m)) => {
                let vals: Vec<String> = m.values().iter().map(|x| sig17(*x)).collect();
                report.push_str(&format!("{name}\t{}\n", vals.join("\t")));
            }
        }
    }
    match &a.out {
        Some(out) => {
            write_file(out, report.as_bytes())?;
            ctx.record(&[&a.model], vec![out.clone()], &manifest_path(out))
        }
        None => {
            std::io::stdout().write_all(report.as_bytes())?;
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct TableOut {
    scope: Vec<String>,
    values: Vec<f64>,
}

impl TableOut {
    fn new(d: &Domain, t: &TableFactor) -> Self {
        TableOut { scope: t.vars().iter().map(|v| d.name(*v).to_string()).collect(), values: t.values().to_vec() }
    }
}

#[derive(Serialize)]
struct FamilyOut {
    child: String,
    #[serde(flatten)]
    table: TableOut,
}

#[derive(Serialize)]
struct LatentOut {
    name: String,
    cardinality: usize,
}

#[derive(Serialize)]
struct FitOut {
    method: FitMethod,
    /// `F` for network and chain-graph fits, `G` for hidden-variable fits.
    bound: f64,
    log_evidence: f64,
    restart_index: usize,
    latent: Vec<LatentOut>,
    families: Vec<FamilyOut>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    potentials: Vec<TableOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    log_zq: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    rho: Vec<FamilyOut>,
    diagnostics: Diagnostics,
    trace: Vec<TraceStep>,
}

fn families_out(d: &Domain, fams: &[DirectedFamily]) -> Vec<FamilyOut> {
    fams.iter()
        .map(|f| FamilyOut { child: d.name(f.child()).to_string(), table: TableOut::new(d, f.cpt()) })
        .collect()
}

fn structure_for(a: &FitArgs, p: &FactorizedModel, ev: &Evidence) -> Result<QStructure> {
    if let Some(k) = a.mixture {
        return Ok(hidden::mixture_mean_field(p.domain(), ev, k)?);
    }
    match &a.q_structure {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading structure {}", path.display()))?;
            let file: StructureFile = serde_json::from_str(&text)
                .with_context(|| format!("parsing structure {}", path.display()))?;
            Ok(file.build(p.domain(), ev)?)
        }
        None => Ok(QStructure::mean_field(p.domain(), ev)?),
    }
}

pub fn validate_fit(a: &FitArgs) -> std::result::Result<(), Failure> {
    if a.mixture.is_some() && a.method != FitMethod::Hidden {
        return Err(Failure::Usage("--mixture requires --method hidden".into()));
    }
    if a.mixture.is_some() && a.q_structure.is_some() {
        return Err(Failure::Usage("--mixture and --q-structure are exclusive".into()));
    }
    Ok(())
}

pub fn fit(ctx: &Ctx, a: &FitArgs) -> Result<()> {
    let (p, ev) = load(&a.model, a.evidence.as_deref())?;
    let s = structure_for(a, &p, &ev)?;
    let opts = OptimizerOptions {
        max_sweeps: a.sweeps,
        restarts: a.restarts,
        tol: a.tol,
        seed: a.seed,
        damping: a.damping,
        ..Default::default()
    };
    let d = s.domain();
    let latent = s
        .latent()
        .iter()
        .map(|v| LatentOut { name: d.name(*v).to_string(), cardinality: d.card(*v) })
        .collect();
    let le = log_evidence(&p, &ev);
    let out = match a.method {
        FitMethod::Bn => {
            let r = bn::fit(&p, &ev, &s, &opts)?;
            let diagnostics = r.diagnostics();
            FitOut {
                method: a.method,
                bound: r.bound,
                log_evidence: le,
                restart_index: r.restart_index,
                latent,
                families: families_out(d, r.q.families()),
                potentials: Vec::new(),
                log_zq: None,
                rho: Vec::new(),
                diagnostics,
                trace: r.trace,
            }
        }
        FitMethod::Cg => {
            let r = cg::fit_cg(&p, &ev, &s, &opts)?;
            let diagnostics = r.diagnostics();
            FitOut {
                method: a.method,
                bound: r.bound,
                log_evidence: le,
                restart_index: r.restart_index,
                latent,
                families: families_out(d, r.q.families()),
                potentials: r.q.potentials().iter().map(|t| TableOut::new(d, t)).collect(),
                log_zq: Some(r.q.log_zq()),
                rho: Vec::new(),
                diagnostics,
                trace: r.trace,
            }
        }
        FitMethod::Hidden => {
            let r = hidden::fit_hidden(&p, &ev, &s, &opts)?;
            let diagnostics = r.diagnostics();
            let rho = r
                .q
                .q()
                .families()
                .iter()
                .zip(r.q.rho())
                .map(|(f, t)| FamilyOut { child: d.name(f.child()).to_string(), table: TableOut::new(d, t) })
                .collect();
            FitOut {
                method: a.method,
                bound: r.bound,
                log_evidence: le,
                restart_index: r.restart_index,
                latent,
                families: families_out(d, r.q.q().families()),
                potentials: Vec::new(),
                log_zq: None,
                rho,
                diagnostics,
                trace: r.trace,
            }
        }
    };
    let mut text = serde_json::to_string_pretty(&out)?;
    text.push('\n');
    eprintln!("bound {}  log-evidence {}", sig17(out.bound), sig17(le));
    match &a.out {
        Some(path) => {
            write_file(path, text.as_bytes())?;
            let mut inputs: Vec<&Path> = vec![&a.model];
            if let Some(q) = &a.q_structure {
                inputs.push(q);
            }
            ctx.record(&inputs, vec![path.clone()], &manifest_path(path))
        }
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

pub fn benchmark(ctx: &Ctx, a: &BenchmarkArgs) -> Result<()> {
    let bc = BenchmarkConfig {
        slices: a.slices.0.clone(),
        vars_per_slice: a.vars_per_slice.0.clone(),
        methods: if a.methods.is_empty() { standard_methods() } else { a.methods.clone() },
        nets_per_cell: a.nets,
        opts: OptimizerOptions { max_sweeps: a.sweeps, restarts: a.restarts, tol: a.tol, ..Default::default() },
        seed: a.seed,
        jobs: a.jobs,
        record_timing: a.timing,
    };
    let records = run_benchmark(&bc)?;
    for r in records.iter().filter(|r| r.flagged()) {
        eprintln!(
            "warning: no finite bound for {}:{} on net {} (slices {}, vars {})",
            r.method.as_str(),
            r.variant,
            r.net_index,
            r.slices,
            r.vars_per_slice
        );
    }
    let mut buf = Vec::new();
    write_csv(&records, &mut buf)?;
    write_file(&a.out, &buf)?;
    ctx.record(&[], vec![a.out.clone()], &manifest_path(&a.out))
}

pub fn plot(ctx: &Ctx, a: &PlotArgs) -> Result<()> {
    let file = std::fs::File::open(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let records = read_csv(file)?;
    if records.is_empty() {
        anyhow::bail!("{} holds no records", a.input.display());
    }
    let rows = summarize(&records);
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut outputs = Vec::new();
    let mut vars: Vec<usize> = rows.iter().map(|r| r.vars_per_slice).collect();
    vars.dedup();
    for v in vars {
        let path = a.out.join(format!("gap_vars{v}.svg"));
        write_file(&path, render_svg(&rows, v).as_bytes())?;
        outputs.push(path);
    }
    let summary = a.out.join("summary.csv");
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r)?;
    }
    write_file(&summary, &w.into_inner().context("flushing summary")?)?;
    outputs.push(summary);
    ctx.record(&[&a.input], outputs, &a.out.join("manifest.json"))
}
