//! Medians and quartiles of the gap per slice.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bench::run::{MethodKind, RunRecord};

/// Nearest-rank percentile of sorted data: the value at rank
/// `ceil(pct/100 · n)` (at least 1).
pub fn nearest_rank(sorted: &[f64], pct: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty data");
    let n = sorted.len();
    let rank = ((pct / 100.0) * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub vars_per_slice: usize,
    pub slices: usize,
    pub method: MethodKind,
    pub variant: usize,
    pub count: usize,
    pub median: f64,
    pub p25: f64,
    pub p75: f64,
}

/// One row per `(vars_per_slice, slices, method, variant)` present in `records`.
pub fn summarize(records: &[RunRecord]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(usize, usize, MethodKind, usize), Vec<f64>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.vars_per_slice, r.slices, r.method, r.variant))
            .or_default()
            .push(r.gap_per_slice);
    }
    groups
        .into_iter()
        .map(|((vars_per_slice, slices, method, variant), mut gaps)| {
            gaps.sort_by(f64::total_cmp);
            SummaryRow {
                vars_per_slice,
                slices,
                method,
                variant,
                count: gaps.len(),
                median: nearest_rank(&gaps, 50.0),
                p25: nearest_rank(&gaps, 25.0),
                p75: nearest_rank(&gaps, 75.0),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank_on_one_to_twenty() {
        let v: Vec<f64> = (1..=20).map(f64::from).collect();
        assert_eq!(nearest_rank(&v, 50.0), 10.0);
        assert_eq!(nearest_rank(&v, 25.0), 5.0);
        assert_eq!(nearest_rank(&v, 75.0), 15.0);
        assert_eq!(nearest_rank(&v, 0.0), 1.0);
        assert_eq!(nearest_rank(&v, 100.0), 20.0);
    }

    #[test]
    fn constant_gaps() {
        let recs: Vec<RunRecord> = (0..20)
            .map(|i| RunRecord {
                slices: 2,
                vars_per_slice: 3,
                method: MethodKind::Mixture,
                variant: 1,
                net_index: i,
                log_evidence: -1.0,
                bound: -1.5,
                gap_per_slice: 0.25,
                wall_ms: 0.0,
            })
            .collect();
        let rows = summarize(&recs);
        assert_eq!(rows.len(), 1);
        assert_eq!((rows[0].median, rows[0].p25, rows[0].p75), (0.25, 0.25, 0.25));
    }
}
