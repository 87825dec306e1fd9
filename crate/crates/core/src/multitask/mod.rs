//! Auxiliary multi-task network. It reads each agent's raw observation
//! plus short histories of four global traffic indicators and predicts
//! flow statistics, travel-time statistics, next queue length and vehicles
//! on the road. Its internal features (`o_shr` from the shared trunk and
//! `o_spe` from the task branches) are handed to the policy.

mod history;
mod net;
mod targets;
mod trainer;

pub use history::{HistoryBuffer, Indicators};
pub use net::{MtCache, MtInput, MtOutput, MultiTaskNet, TASK_ARITY};
pub use targets::{flow_statistics, EpisodeTracker, TaskTargets, TargetNormalizer};
pub use trainer::{CoefMode, LatentState, MultiTask, MultiTaskConfig, Sample, TaskLosses};

/// Dimension of both latent vectors.
pub const LATENT_DIM: usize = 5;
