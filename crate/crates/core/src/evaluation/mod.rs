//! Scoring, cross-validated grid search and rank statistics.

pub mod metrics;
pub mod ranking;
pub mod search;

pub use metrics::{auc, Confusion};
pub use ranking::{friedman, nemenyi_cd, rank_row, rank_table, FriedmanResult, RankTable};
pub use search::{cross_validate, fold_aucs, grid_search_cv, CvEvaluator, finish_search, candidates, select_best, Candidate, Grids, SearchResult};
