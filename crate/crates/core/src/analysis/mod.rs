//! Corpus statistics: aggregate counts, strategy phase distribution,
//! k-hop strategy transitions and inter-annotator agreement.

mod kappa;
mod phase;
mod stats;
mod transitions;

pub use kappa::{category_counts, fleiss_kappa, Kappa, KappaError};
pub use phase::{phase_distribution, phase_points, PhaseMatrix, PhasePoint};
pub use stats::{corpus_stats, CountRow, StatReport};
pub use transitions::{
    merge_adjacent, transition_stats, transition_stats_with, Denominator, TransitionEntry,
    TransitionTable, TransitionWindow,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalysisError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("number of bins must be at least 1")]
    ZeroBins,
    #[error("hops must be 3, 4 or 5, got {0}")]
    BadHops(usize),
}
