//! Restart and sweep loop shared by all approximation families.

use crate::error::Result;
use crate::rng::{self, StreamRng};
use crate::variational::options::{
    Block, Diagnostics, FitResult, OptimizerOptions, RestartSummary, TraceLevel, TraceStep,
};

/// One restart's mutable optimization state.
pub(crate) trait AscentState {
    type Output: Clone;

    /// Current value of the objective, evaluated lazily after updates.
    fn bound(&mut self) -> f64;

    /// Updates performed once after initialization, before the first sweep.
    fn prelude(&self) -> Vec<Block> {
        Vec::new()
    }

    /// Blocks of one sweep, in order.
    fn schedule(&self) -> Vec<Block>;

    /// Applies the update for `block`.
    fn step(&mut self, block: Block) -> Result<()>;

    fn diagnostics(&self) -> Diagnostics;

    fn output(&self) -> Self::Output;
}

pub(crate) fn converged(prev: f64, cur: f64, tol: f64) -> bool {
    if !prev.is_finite() || !cur.is_finite() {
        return prev == cur;
    }
    (cur - prev).abs() <= tol * prev.abs().max(1.0)
}

/// Runs `opts.restarts` independent restarts, each initialized from its own
/// stream `(seed, "restart", r)`, and keeps the best final bound (lowest
/// restart index on ties). With [`TraceLevel::Sweep`] the objective is only
/// evaluated at the end of the prelude and of each sweep, and the trace
/// entry carries the last block updated.
pub(crate) fn run<S, F>(opts: &OptimizerOptions, mut init: F) -> Result<FitResult<S::Output>>
where
    S: AscentState,
    F: FnMut(&mut StreamRng) -> Result<S>,
{
    opts.validate()?;
    let mut best: Option<(usize, f64, S::Output)> = None;
    let mut restarts = Vec::with_capacity(opts.restarts);
    for r in 0..opts.restarts {
        let mut rng = rng::stream(opts.seed, "restart", r as u64);
        let mut state = init(&mut rng)?;
        let mut trace = vec![TraceStep { sweep: 0, block: Block::Init, bound: state.bound() }];
        let per_update = opts.trace == TraceLevel::Update;
        let mut run_blocks = |state: &mut S, blocks: Vec<Block>, sweep: usize| -> Result<()> {
            let last = blocks.last().copied();
            for block in blocks {
                state.step(block)?;
                if per_update {
                    trace.push(TraceStep { sweep, block, bound: state.bound() });
                }
            }
            if let (false, Some(block)) = (per_update, last) {
                trace.push(TraceStep { sweep, block, bound: state.bound() });
            }
            Ok(())
        };
        let blocks = state.prelude();
        run_blocks(&mut state, blocks, 0)?;
        let mut prev = state.bound();
        let mut sweeps = 0;
        for sweep in 1..=opts.max_sweeps {
            let blocks = state.schedule();
            run_blocks(&mut state, blocks, sweep)?;
            sweeps = sweep;
            let cur = state.bound();
            if converged(prev, cur, opts.tol) {
                break;
            }
            prev = cur;
        }
        let bound = state.bound();
        if best.as_ref().is_none_or(|(_, b, _)| bound > *b) {
            best = Some((r, bound, state.output()));
        }
        restarts.push(RestartSummary { bound, sweeps, trace, diagnostics: state.diagnostics() });
    }
    let (restart_index, bound, q) = best.expect("at least one restart");
    Ok(FitResult { q, bound, trace: restarts[restart_index].trace.clone(), restart_index, restarts })
}
