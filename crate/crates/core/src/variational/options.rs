use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::VarId;

/// Settings shared by every coordinate-ascent fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerOptions {
    pub max_sweeps: usize,
    pub restarts: usize,
    /// Stop once a full sweep changes the bound by less than `tol · max(1, |F|)`.
    pub tol: f64,
    pub seed: u64,
    /// Initial step for damped chain-graph updates; 1 means the undamped update is tried first.
    pub damping: f64,
    #[serde(default)]
    pub trace: TraceLevel,
}

/// How often the objective is evaluated and recorded during a fit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceLevel {
    /// After every block update.
    #[default]
    Update,
    /// Once per sweep. Chain-graph fits still evaluate after every update
    /// because damping needs it.
    Sweep,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            max_sweeps: 10,
            restarts: 10,
            tol: 1e-8,
            seed: 0,
            damping: 1.0,
            trace: TraceLevel::Update,
        }
    }
}

impl OptimizerOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_sweeps == 0 {
            return Err(Error::Options("max_sweeps must be at least 1".into()));
        }
        if self.restarts == 0 {
            return Err(Error::Options("restarts must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Options("tol must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.damping) || self.damping == 0.0 {
            return Err(Error::Options("damping must be in (0, 1]".into()));
        }
        Ok(())
    }
}

/// The parameter block touched by one update.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "lowercase")]
pub enum Block {
    /// Bound right after initialization.
    Init,
    /// Conditional distribution of a variable.
    Family(VarId),
    /// Chain-graph potential, by declaration index.
    Potential(usize),
    /// Variational entropy parameters of a family, by child variable.
    Rho(VarId),
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub sweep: usize,
    pub block: Block,
    pub bound: f64,
}

/// Counters for the non-standard paths an update can take.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Columns or blocks whose energies were all `-inf` and were reset to uniform.
    pub uniform_fallbacks: usize,
    /// Columns left unchanged because the conditioning configuration has no mass.
    pub unsupported_skips: usize,
    /// Chain-graph updates accepted only after damping.
    pub damped_updates: usize,
    /// Chain-graph updates rejected and reverted.
    pub reverted_updates: usize,
}

impl Diagnostics {
    pub fn absorb(&mut self, other: Diagnostics) {
        self.uniform_fallbacks += other.uniform_fallbacks;
        self.unsupported_skips += other.unsupported_skips;
        self.damped_updates += other.damped_updates;
        self.reverted_updates += other.reverted_updates;
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RestartSummary {
    pub bound: f64,
    pub sweeps: usize,
    pub trace: Vec<TraceStep>,
    pub diagnostics: Diagnostics,
}

/// Best-of-restarts outcome of a fit.
#[derive(Clone, Debug)]
pub struct FitResult<Q> {
    pub q: Q,
    pub bound: f64,
    /// Per-update bounds of the winning restart.
    pub trace: Vec<TraceStep>,
    pub restart_index: usize,
    pub restarts: Vec<RestartSummary>,
}

impl<Q> FitResult<Q> {
    /// Largest decrease between consecutive trace entries across every restart.
    pub fn worst_decrease(&self) -> f64 {
        self.restarts
            .iter()
            .flat_map(|r| r.trace.windows(2).map(|w| w[0].bound - w[1].bound))
            .filter(|d| d.is_finite())
            .fold(0.0, f64::max)
    }

    pub fn diagnostics(&self) -> Diagnostics {
        let mut d = Diagnostics::default();
        for r in &self.restarts {
            d.absorb(r.diagnostics);
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_protocol() {
        let o = OptimizerOptions::default();
        assert_eq!((o.max_sweeps, o.restarts), (10, 10));
        assert!(o.validate().is_ok());
    }

    #[test]
    fn invalid_options() {
        for o in [
            OptimizerOptions { max_sweeps: 0, ..Default::default() },
            OptimizerOptions { restarts: 0, ..Default::default() },
            OptimizerOptions { tol: 0.0, ..Default::default() },
            OptimizerOptions { damping: 1.5, ..Default::default() },
        ] {
            assert!(o.validate().is_err());
        }
    }
}
