//! Player skill decomposition for team-vs-team match data.
//!
//! Match outcomes are explained by logistic-regression models over signed
//! sparse encodings of who played which champion. Comparing the
//! cross-validated accuracies of models with and without each skill block
//! (player base, champion base, player-champion specific) tells which
//! components matter.

pub mod dataset;
pub mod evalcmp;
pub mod features;
pub mod logreg;
pub mod stats;
pub mod synth;
pub mod trueskill;

pub use dataset::{
    anonymize, build_index, chronological_split, ingest, DatasetError, Format, IndexedDataset,
    IndexedMatch, IngestOptions, MatchRecord, Outcome, Participation, Pick, PlayerRef,
};
pub use features::{encode, weight_lookup, EncodingScheme, Scheme, SkillTable, SparseVector};
pub use logreg::{sigmoid, train, LabeledSet, OptimizerConfig, TrainedModel};
pub use trueskill::{evaluate_chronological, Rating, TrueSkillParams, TrueSkillReport};
pub use synth::{bayes_accuracy, calibrate_scale, generate_matches, sample_ground_truth, GroundTruth, WorldConfig};
pub use evalcmp::{
    cross_validate, grid_c, kfold_indices, majority_baseline, paired_ttest, run_comparison,
    significant, verdict, ComparisonConfig, ComparisonReport, CvResult, Hypothesis, ModelKind,
};
