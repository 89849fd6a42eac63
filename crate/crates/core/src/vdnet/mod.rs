//! Desk-scale feedforward networks with variational Gaussian dropout
//! layers, trained by first-order ascent on the pseudo-ELBO with the
//! exact KL term, plus datasets, checkpoints and sparsity reports.

pub mod checkpoint;
pub mod data;
pub mod layer;
pub mod matrix;
pub mod net;
pub mod sparsity;
pub mod train;

pub use checkpoint::{Checkpoint, LayerCheckpoint, CHECKPOINT_SCHEMA_VERSION};
pub use data::{builtin_linear, builtin_sine, from_csv, Dataset};
pub use layer::{
    correlated_kl_diagnostic, CorrelatedKlDiagnostic, CorrelatedVDLayer, DenseVDLayer, LayerMode,
    PriorScope,
};
pub use matrix::Matrix;
pub use net::{
    backward, elbo_objective, Activation, ElboEval, ForwardRecord, LayerGradients, NetGradients,
    Network, NetworkConfig,
};
pub use sparsity::{median, sparsity_report, SparsityReport};
pub use train::{train, EpochStats, TrainConfig, TrainOutcome};
