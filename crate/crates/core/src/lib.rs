//! Hyperdimensional classification with optimized level hypervectors.
//!
//! Features are quantized into `M` levels, each level of each feature maps
//! to a bipolar hypervector, samples are bundled from their level vectors
//! and class encoders from their samples. The number of bits flipped
//! between consecutive level vectors (the [`hv::FlipBudget`]) is searched
//! with NSGA-II to trade training accuracy against encoder separation.

pub mod data;
pub mod error;
pub mod evolve;
pub mod hv;
pub mod model;
pub mod objectives;
pub mod rng;

pub use data::{Dataset, Quantizer, Split};
pub use error::{HdcError, Result};
pub use evolve::{GaConfig, ParetoFront};
pub use hv::{FlipBudget, Hypervector, IntVector, LevelTable};
pub use model::{Prediction, TrainedModel};
pub use objectives::{ConfusionCounts, ObjectiveScores, TrainingProblem};
