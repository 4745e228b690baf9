//! The benchmark grid: for every cell `(slices, vars_per_slice)` and every
//! sampled network, fit each method and record the gap to the exact
//! log-evidence.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::time::Instant;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::approx::{build_horizontal_approx, build_mixture_approx, build_vertical_approx};
use crate::bench::dbn::{generate_dbn, DbnConfig};
use crate::error::{Error, Result};
use crate::exact::log_evidence;
use crate::rng::stream;
use crate::variational::hidden::fit_hidden;
use crate::variational::options::{OptimizerOptions, TraceLevel};
use crate::variational::structure::QStructure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodKind {
    /// Mixture of mean fields; the variant is the number of components.
    Mixture,
    /// One hidden variable per slice; the variant is its cardinality.
    Vertical,
    /// One hidden variable per chain; the variant is its cardinality.
    Horizontal,
}

impl MethodKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MethodKind::Mixture => "mixture",
            MethodKind::Vertical => "vertical",
            MethodKind::Horizontal => "horizontal",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Method {
    pub kind: MethodKind,
    pub variant: usize,
}

impl Method {
    pub fn structure(&self, cfg: &DbnConfig) -> Result<QStructure> {
        match self.kind {
            MethodKind::Mixture => build_mixture_approx(cfg, self.variant),
            MethodKind::Vertical => build_vertical_approx(cfg, self.variant),
            MethodKind::Horizontal => build_horizontal_approx(cfg, self.variant),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind.as_str(), self.variant)
    }
}

impl FromStr for Method {
    type Err = Error;

    /// `kind:variant`, e.g. `mixture:4` or `vertical:2`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Options(format!("bad method '{s}', expected kind:variant"));
        let (kind, variant) = s.split_once(':').ok_or_else(bad)?;
        let kind = match kind.trim() {
            "mixture" => MethodKind::Mixture,
            "vertical" => MethodKind::Vertical,
            "horizontal" => MethodKind::Horizontal,
            _ => return Err(bad()),
        };
        let variant: usize = variant.trim().parse().map_err(|_| bad())?;
        if variant == 0 {
            return Err(bad());
        }
        Ok(Method { kind, variant })
    }
}

/// Mixtures with 1, 4 and 6 components; vertical and horizontal hidden
/// variables with 1, 2 and 3 states.
pub fn standard_methods() -> Vec<Method> {
    let mut out = Vec::new();
    for (kind, variants) in [
        (MethodKind::Mixture, [1, 4, 6]),
        (MethodKind::Vertical, [1, 2, 3]),
        (MethodKind::Horizontal, [1, 2, 3]),
    ] {
        out.extend(variants.into_iter().map(|variant| Method { kind, variant }));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub slices: Vec<usize>,
    pub vars_per_slice: Vec<usize>,
    pub methods: Vec<Method>,
    pub nets_per_cell: usize,
    /// Fit settings; the seed is replaced by each network's seed.
    pub opts: OptimizerOptions,
    pub seed: u64,
    /// Worker threads; 1 runs everything on the calling thread.
    pub jobs: usize,
    /// Record wall-clock times; off by default so output is reproducible byte for byte.
    pub record_timing: bool,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            slices: (2..=7).collect(),
            vars_per_slice: vec![3, 4],
            methods: standard_methods(),
            nets_per_cell: 20,
            opts: OptimizerOptions::default(),
            seed: 0,
            jobs: 1,
            record_timing: false,
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nets_per_cell == 0 {
            return Err(Error::Options("nets_per_cell must be at least 1".into()));
        }
        if self.slices.is_empty() || self.vars_per_slice.is_empty() || self.methods.is_empty() {
            return Err(Error::Options("empty benchmark grid".into()));
        }
        if self.jobs == 0 {
            return Err(Error::Options("jobs must be at least 1".into()));
        }
        self.opts.validate()
    }
}

/// One fitted method on one network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub slices: usize,
    pub vars_per_slice: usize,
    pub method: MethodKind,
    pub variant: usize,
    pub net_index: usize,
    pub log_evidence: f64,
    /// Final objective of the best restart.
    pub bound: f64,
    /// `(log_evidence − bound) / slices`
    pub gap_per_slice: f64,
    pub wall_ms: f64,
}

impl RunRecord {
    /// True when the fit found no finite bound; such records are kept as-is.
    pub fn flagged(&self) -> bool {
        !self.bound.is_finite()
    }

    fn key(&self) -> (usize, usize, usize, MethodKind, usize) {
        (self.slices, self.vars_per_slice, self.net_index, self.method, self.variant)
    }
}

/// Seed of network `net` in cell `(slices, vars_per_slice)`, drawn from the
/// stream `(seed, "net", index)` with the cell and net packed into the index.
pub fn net_seed(seed: u64, slices: usize, vars_per_slice: usize, net: usize) -> u64 {
    let index = ((slices as u64) << 40) | ((vars_per_slice as u64) << 20) | net as u64;
    stream(seed, "net", index).next_u64()
}

/// Generates one network and fits every method on it.
pub fn run_network(
    bc: &BenchmarkConfig,
    slices: usize,
    vars_per_slice: usize,
    net: usize,
) -> Result<Vec<RunRecord>> {
    let seed = net_seed(bc.seed, slices, vars_per_slice, net);
    let cfg = DbnConfig { slices, vars_per_slice, seed };
    let (p, ev) = generate_dbn(&cfg)?;
    let le = log_evidence(&p, &ev);
    let opts = OptimizerOptions { seed, trace: TraceLevel::Sweep, ..bc.opts.clone() };
    let mut out = Vec::with_capacity(bc.methods.len());
    for m in &bc.methods {
        let start = Instant::now();
        let structure = m.structure(&cfg)?;
        let fit = fit_hidden(&p, &ev, &structure, &opts)?;
        let wall_ms = if bc.record_timing { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
        out.push(RunRecord {
            slices,
            vars_per_slice,
            method: m.kind,
            variant: m.variant,
            net_index: net,
            log_evidence: le,
            bound: fit.bound,
            gap_per_slice: (le - fit.bound) / slices as f64,
            wall_ms,
        });
    }
    Ok(out)
}

/// Runs the whole grid. Records come back sorted by
/// `(slices, vars_per_slice, net_index, method, variant)` whatever the
/// number of jobs.
pub fn run_benchmark(bc: &BenchmarkConfig) -> Result<Vec<RunRecord>> {
    bc.validate()?;
    let mut tasks = Vec::new();
    for &s in &bc.slices {
        for &v in &bc.vars_per_slice {
            for net in 0..bc.nets_per_cell {
                tasks.push((s, v, net));
            }
        }
    }
    let results: Vec<Result<Vec<RunRecord>>> = if bc.jobs == 1 {
        tasks.iter().map(|&(s, v, n)| run_network(bc, s, v, n)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(bc.jobs)
            .build()
            .map_err(|e| Error::Options(format!("thread pool: {e}")))?;
        pool.install(|| tasks.par_iter().map(|&(s, v, n)| run_network(bc, s, v, n)).collect())
    };
    let mut records = Vec::new();
    for r in results {
        records.extend(r?);
    }
    records.sort_by_key(|r| r.key());
    Ok(records)
}

pub fn write_csv<W: Write>(records: &[RunRecord], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in records {
        wr.serialize(r).map_err(csv_error)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<RunRecord>> {
    csv::Reader::from_reader(r).deserialize().map(|x| x.map_err(csv_error)).collect()
}

fn csv_error(e: csv::Error) -> Error {
    Error::invalid(format!("csv: {e}"))
}
