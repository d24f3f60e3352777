//! LER estimation from rendered images: classical edge detection as the
//! base regressor, summary features of the noise image, a difficulty
//! regressor whose output maps to the normalization weight `gamma =
//! exp(-phi)`, and per-edge quantile networks. Trained models persist as
//! versioned JSON checkpoints.

pub mod checkpoint;
pub mod difficulty;
pub mod edges;
pub mod features;
pub mod nn;
pub mod quantile;

pub use checkpoint::{
    load_difficulty_model, load_quantile_net, save_difficulty_model, save_quantile_net,
    CHECKPOINT_FORMAT, CHECKPOINT_VERSION,
};
pub use difficulty::{
    difficulty_target, fit_difficulty, smoothed_mae, smoothed_mae_grad, DifficultyModel,
};
pub use edges::{detect_edges, estimate_ler, estimate_ler_detailed, DetectedEdges, LerPrediction};
pub use features::{difficulty_features, DifficultyFeatures, FEATURE_DIM};
pub use quantile::{fit_quantile_net, pinball_grad, pinball_loss, predict_quantiles, QuantileNet};
