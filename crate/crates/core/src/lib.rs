//! Multi-agent traffic-signal control laboratory.
//!
//! The crate bundles a deterministic queue-based traffic simulator ([`sim`]),
//! scenario generation and file formats ([`scenario`]), classical controllers
//! ([`baselines`]), a small dense neural toolkit with hand-written gradients
//! ([`neural`]), the auxiliary multi-task latent-state network ([`multitask`]),
//! per-intersection DQN agents ([`agent`]) and the experiment harness that
//! ties them together ([`harness`]).

pub mod agent;
pub mod baselines;
pub mod error;
pub mod harness;
pub mod multitask;
pub mod neural;
pub mod rng;
pub mod scenario;
pub mod sim;

pub use error::{Error, Result};
