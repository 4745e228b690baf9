//! Synthetic dynamic Bayesian networks and the comparison harness.

pub mod approx;
pub mod dbn;
pub mod plot;
pub mod run;
pub mod summary;

pub use approx::{build_horizontal_approx, build_mixture_approx, build_vertical_approx};
pub use dbn::{generate_dbn, DbnConfig};
pub use plot::render_svg;
pub use run::{
    net_seed, read_csv, run_benchmark, run_network, standard_methods, write_csv, BenchmarkConfig,
    Method, MethodKind, RunRecord,
};
pub use summary::{nearest_rank, summarize, SummaryRow};
