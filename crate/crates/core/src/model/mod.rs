//! Data containers and density evaluations for the observation mixture and
//! the latent structural-equation Gaussian.

pub mod data;
pub mod density;
pub mod matrix;
pub mod orthant;
pub mod params;
pub mod state;
pub mod structural;

pub use data::ExpressionDataset;
pub use density::{
    conditional_score_law, indicator_from_score, mean_surface, mixture_log_density, sem_log_density, ExpressionClass,
};
pub use matrix::RowMatrix;
pub use orthant::orthant_probability_reference;
pub use params::{Hyperparameters, MixtureHyperParams, MixtureParams, SemHyperParams};
pub use state::{ChainState, LatentState, SemParams};
pub use structural::StructuralMatrix;
