//! Early-exit inference with hinge-loss decision gates.
//!
//! A small feed-forward backbone exposes tap points after its blocks; linear
//! gates trained with a one-vs-all hinge loss attach at the taps and either
//! emit an early prediction (when the largest signed distance to a class
//! boundary clears the gate's threshold) or defer the sample deeper. The
//! crate covers the full pipeline: synthetic hierarchical data, backbone
//! training, gate training (hinge and a cross-entropy baseline), cascade
//! inference with exact FLOPs accounting, threshold sweeps, sequential and
//! exhaustive threshold calibration, and CSV report emission via the CLI.

pub mod backbone;
pub mod calibration;
pub mod cascade;
pub mod cli;
pub mod data;
pub mod dgate;
pub mod error;
pub mod textio;
mod util;

pub use backbone::{train_backbone, Activation, Backbone, BlockSpec, ForwardTrace};
pub use calibration::{calibrate_exhaustive, calibrate_sequential, CalibrationSpec};
pub use cascade::{CascadeMetrics, CascadeModel, ExitStage, InferenceTrace};
pub use data::{generate_hierarchical_blobs, load_dataset_csv, save_dataset_csv, split_dataset};
pub use data::{HierarchyConfig, LabeledDataset};
pub use dgate::{
    gate_decide, gate_distances, hinge_objective, hinge_subgradient, train_gate_crossentropy,
    train_gate_hinge, DGate, GateDecision, GateLoss, HingeTrainConfig,
};
pub use error::{Error, Result};
