//! Per-intersection DQN agent acting on the latent-enhanced observation.

mod dqn;
mod observation;
mod replay;

pub use dqn::{argmax, decay_epsilon, epsilon_after, select_action, Agent, AgentConfig, LR_PRESET_ALT};
pub use observation::{assemble_observation, EnhancedObservation};
pub use replay::{ReplayBuffer, Transition};
