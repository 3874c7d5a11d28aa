//! Scoring: per-game results from transcripts, macro averages and the
//! combined score, rank correlation, language delta tables and exports.

mod aggregate;
mod delta;
mod export;
mod format;
mod kendall;

pub use aggregate::{
    load_transcripts, score_run, score_transcripts, GameResult, LoadedTranscript, ProductMode,
    ScoreError, ScoreOptions, ScoreReport,
};
pub use delta::{language_delta, DeltaCell, DeltaMetric, DeltaRow, DeltaTable, MissingBaseline};
pub use export::{
    dense_ranks, export_leaderboard, leaderboard_rows, ranking_from_reports, ranking_pairs_export,
    read_ranking_csv, sort_leaderboard, ExportFormat, RankingError, LEADERBOARD_COLUMNS,
};
pub use format::{fixed2, format_rounded, round2, short2};
pub use kendall::{common_models, kendall_tau, kendall_tau_b, CorrelationError, CorrelationResult, Ranking};
