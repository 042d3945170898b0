//! Offline evaluation: ingest line-delimited prediction records, compute
//! per-task metrics with percentile-bootstrap confidence intervals, run
//! paired Wilcoxon signed-rank tests and aggregate models by tied rank.

mod bootstrap;
mod evaluate;
mod rank;
mod records;
mod wilcoxon;

pub use bootstrap::{percentile_ci, quantile, substream_rng};
pub use evaluate::{evaluate, render_table, EvalConfig, MetricName, TaskReport};
pub use rank::{rank_models, rank_reports, RankTable, TaskRanks, TieMode};
pub use records::{ingest, ingest_reader, ingest_str, IngestReport, LineError, TaskRecord};
pub use wilcoxon::{
    pairwise_wilcoxon, wilcoxon_signed_rank, wilcoxon_signed_rank_with, PairwiseTest, WilcoxonMethod, WilcoxonResult,
};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("paired samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("only {0} non-zero paired differences; at least 5 are needed")]
    Underpowered(usize),
    #[error("non-finite value in paired samples")]
    NonFinite,
    #[error("invalid evaluation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Reward(#[from] crate::reward::RewardError),
}
