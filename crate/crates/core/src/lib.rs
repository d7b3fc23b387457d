//! Toolkit for judging dimensionality-reduction projections and for tuning
//! them efficiently.
//!
//! * Projection quality: Label-Trustworthiness/Continuity ([`labeltnc`])
//!   built on adjusted clustering-validity measures ([`cvm`]), plus classic
//!   rank and correlation metrics ([`drquality`]).
//! * Dataset complexity: pairwise distance shift and mutual neighbor
//!   consistency ([`complexity`]).
//! * Search: conventional and dataset-adaptive hyperparameter workflows
//!   ([`optimize`]) over a small technique set ([`drtech`]), with regression
//!   models ([`regress`]) predicting the best reachable score.
//! * Synthetic generators and sensitivity experiments ([`synthlab`]).

pub mod complexity;
pub mod cvm;
pub mod data;
pub mod drquality;
pub mod drtech;
pub mod error;
pub mod labeltnc;
pub mod neighbors;
pub mod optimize;
pub mod regress;
pub mod synthlab;

pub use data::{DataMatrix, DistanceKind, DistanceMatrix, LabelPartition, LabeledDataset};
pub use error::{Error, Result};
