//! Pool-based active learning for span-extraction QA.

pub mod kmeans;
pub mod pool;
pub mod scoring;
pub mod select;
pub mod simulate;

pub use kmeans::{kmeans, kmeans_plus_plus, lloyd, KMeansResult};
pub use pool::Pool;
pub use scoring::{score_entropy, score_least_confidence, score_margin, AnswerCandidate, PredictionRecord};
pub use select::{
    largest_remainder, select, select_lc_cluster, EmbeddingRecord, EmbeddingTable, MarginMode, Selection, Strategy,
    StrategyConfig,
};
pub use simulate::{
    predictions_by_id, run_simulation, CycleRecord, PredictionSource, ReplayDir, Schedule, ScheduleMode,
    SimulationReport,
};
