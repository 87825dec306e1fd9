use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{ReplayBuffer, Transition};
use crate::neural::{Checkpoint, Mlp, Optimizer, Parameters};
use crate::rng::{stream, stream_rng, Rng};
use crate::scenario::{read_json, write_json};
use crate::{Error, Result};

/// Alternate policy learning rate preset.
pub const LR_PRESET_ALT: f64 = 0.005;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_min: f64,
    pub epsilon_decay: f64,
    pub lr: f64,
    pub minibatch: usize,
    pub hidden: Vec<usize>,
    /// Refresh the target network every this many training events; `None`
    /// bootstraps from the online network.
    pub target_update_every: Option<usize>,
    pub buffer_capacity: usize,
    pub clear_after_train: bool,
    /// Gradient steps per training event.
    pub steps_per_train: usize,
    /// Multiplier applied to the (non-positive) queue reward before storing.
    pub reward_scale: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            gamma: 0.95,
            epsilon_start: 0.1,
            epsilon_min: 0.01,
            epsilon_decay: 0.995,
            lr: 0.001,
            minibatch: 32,
            hidden: vec![20, 20],
            target_update_every: Some(5),
            buffer_capacity: 10_000,
            clear_after_train: true,
            steps_per_train: 8,
            reward_scale: 0.05,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("gamma {} must lie in [0, 1)", self.gamma)));
        }
        if self.minibatch == 0 || self.steps_per_train == 0 || self.buffer_capacity == 0 {
            return Err(Error::Config("minibatch, steps_per_train and buffer_capacity must be positive".into()));
        }
        if !(self.epsilon_min >= 0.0 && self.epsilon_min <= self.epsilon_start && self.epsilon_start <= 1.0) {
            return Err(Error::Config("epsilon bounds must satisfy 0 <= min <= start <= 1".into()));
        }
        if !(self.epsilon_decay > 0.0 && self.epsilon_decay <= 1.0) {
            return Err(Error::Config("epsilon decay must lie in (0, 1]".into()));
        }
        if !(self.lr > 0.0 && self.reward_scale > 0.0) {
            return Err(Error::Config("learning rate and reward scale must be positive".into()));
        }
        if self.target_update_every == Some(0) {
            return Err(Error::Config("target_update_every must be positive".into()));
        }
        Ok(())
    }
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(q: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in q.iter().enumerate().skip(1) {
        if v > q[best] {
            best = i;
        }
    }
    best
}

/// ε-greedy choice. Always consumes one uniform draw, plus one more when
/// exploring.
pub fn select_action(q: &[f64], epsilon: f64, rng: &mut Rng) -> usize {
    let u: f64 = rng.random();
    if u < epsilon {
        rng.random_range(0..q.len())
    } else {
        argmax(q)
    }
}

pub fn decay_epsilon(eps: f64, min: f64, rate: f64) -> f64 {
    (rate * eps).max(min)
}

/// Closed form of ε after `n` decays from the default schedule.
pub fn epsilon_after(n: u32) -> f64 {
    (0.1 * 0.995f64.powi(n as i32)).max(0.01)
}

#[derive(Serialize, Deserialize)]
struct AgentCheckpoint {
    params: Checkpoint,
    epsilon: f64,
    train_events: u64,
}

pub struct Agent {
    config: AgentConfig,
    q: Mlp,
    target: Mlp,
    optimizer: Optimizer,
    epsilon: f64,
    buffer: ReplayBuffer,
    explore_rng: Rng,
    replay_rng: Rng,
    train_events: u64,
}

impl Agent {
    /// `index` selects the agent's private random streams.
    pub fn new(config: AgentConfig, input_dim: usize, num_actions: usize, seed: u64, index: u64) -> Result<Self> {
        config.validate()?;
        if input_dim == 0 || num_actions < 2 {
            return Err(Error::Config(format!(
                "agent needs a non-empty input and at least 2 actions, got {input_dim} and {num_actions}"
            )));
        }
        let mut dims = vec![input_dim];
        dims.extend(&config.hidden);
        dims.push(num_actions);
        let mut init = stream_rng(seed, stream::POLICY_INIT + index);
        let q = Mlp::new(&dims, &mut init);
        Ok(Agent {
            target: q.clone(),
            q,
            optimizer: Optimizer::rmsprop(config.lr),
            epsilon: config.epsilon_start,
            buffer: ReplayBuffer::new(config.buffer_capacity),
            explore_rng: stream_rng(seed, stream::EXPLORATION + index),
            replay_rng: stream_rng(seed, stream::REPLAY + index),
            train_events: 0,
            config,
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn train_events(&self) -> u64 {
        self.train_events
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn q_network(&self) -> &Mlp {
        &self.q
    }

    pub fn q_network_mut(&mut self) -> &mut Mlp {
        &mut self.q
    }

    pub fn input_dim(&self) -> usize {
        self.q.input_dim()
    }

    pub fn num_actions(&self) -> usize {
        self.q.output_dim()
    }

    pub fn q_values(&self, obs: &[f64]) -> Result<Vec<f64>> {
        self.q.forward(obs)
    }

    /// ε-greedy action under the current exploration rate.
    pub fn act(&mut self, obs: &[f64]) -> Result<usize> {
        let q = self.q.forward(obs)?;
        Ok(select_action(&q, self.epsilon, &mut self.explore_rng))
    }

    pub fn act_greedy(&self, obs: &[f64]) -> Result<usize> {
        Ok(argmax(&self.q.forward(obs)?))
    }

    /// Stores a transition with the raw (non-positive) reward scaled by
    /// `reward_scale`.
    pub fn store(&mut self, obs: Vec<f64>, action: usize, raw_reward: f64, next_obs: Vec<f64>, terminal: bool) -> Result<()> {
        if raw_reward > 0.0 || !raw_reward.is_finite() {
            return Err(Error::Contract(format!("reward {raw_reward} must be finite and non-positive")));
        }
        if action >= self.num_actions() || obs.len() != self.input_dim() || next_obs.len() != self.input_dim() {
            return Err(Error::Contract("transition does not match the agent's dimensions".into()));
        }
        self.buffer.store(Transition {
            obs,
            action,
            reward: raw_reward * self.config.reward_scale,
            next_obs,
            terminal,
        });
        Ok(())
    }

    pub fn td_target(&self, t: &Transition) -> Result<f64> {
        if t.terminal {
            return Ok(t.reward);
        }
        let net = if self.config.target_update_every.is_some() { &self.target } else { &self.q };
        let next = net.forward(&t.next_obs)?;
        Ok(t.reward + self.config.gamma * next.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
    }

    /// One RMSprop step on a minibatch drawn with replacement. Returns the
    /// pre-update MSE, or None when the buffer is empty.
    pub fn td_step(&mut self) -> Result<Option<f64>> {
        if self.buffer.is_empty() {
            log::warn!("td_step called with an empty replay buffer");
            return Ok(None);
        }
        let idx = self.buffer.sample_indices(self.config.minibatch, &mut self.replay_rng);
        let n = idx.len() as f64;
        let mut grad = self.q.zeros_like();
        let mut loss = 0.0;
        for i in idx {
            let t = self.buffer.get(i).expect("sampled index in range");
            let y = self.td_target(t)?;
            let (q, cache) = self.q.forward_cached(&t.obs)?;
            let err = q[t.action] - y;
            loss += err * err / n;
            let mut dq = vec![0.0; q.len()];
            dq[t.action] = 2.0 * err / n;
            self.q.backward(&cache, &dq, &mut grad);
        }
        if !loss.is_finite() {
            return Err(Error::NonFinite("td loss".into()));
        }
        self.optimizer.step(&mut self.q, &grad)?;
        Ok(Some(loss))
    }

    /// A full policy-training event: `steps_per_train` TD steps, one ε
    /// decay, periodic target refresh and (by default) clearing the buffer.
    pub fn train_event(&mut self) -> Result<Option<f64>> {
        if self.buffer.is_empty() {
            log::warn!("policy training skipped: replay buffer is empty");
            return Ok(None);
        }
        let mut mean = 0.0;
        for _ in 0..self.config.steps_per_train {
            mean += self.td_step()?.unwrap_or(0.0) / self.config.steps_per_train as f64;
        }
        self.train_events += 1;
        self.epsilon = decay_epsilon(self.epsilon, self.config.epsilon_min, self.config.epsilon_decay);
        if let Some(every) = self.config.target_update_every {
            if self.train_events % every as u64 == 0 {
                self.target = self.q.clone();
            }
        }
        if self.config.clear_after_train {
            self.buffer.clear();
        }
        Ok(Some(mean))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if !self.q.all_finite() {
            return Err(Error::NonFinite("policy parameters".into()));
        }
        write_json(
            path,
            &AgentCheckpoint {
                params: Checkpoint::capture("policy", &self.q),
                epsilon: self.epsilon,
                train_events: self.train_events,
            },
        )
    }

    pub fn load(&mut self, path: &Path) -> Result<()> {
        let ck: AgentCheckpoint = read_json(path)?;
        ck.params.restore("policy", &mut self.q)?;
        self.target = self.q.clone();
        self.epsilon = ck.epsilon;
        self.train_events = ck.train_events;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::gradcheck::check_gradients;
    use crate::neural::{mse_loss, Tensor};
    use proptest::prelude::*;

    fn agent(cfg: AgentConfig) -> Agent {
        Agent::new(cfg, 3, 4, 7, 0).unwrap()
    }

    #[test]
    fn greedy_and_ties() {
        let mut rng = stream_rng(0, 0);
        assert_eq!(select_action(&[0.0, 3.0, 1.0, 2.0], 0.0, &mut rng), 1);
        assert_eq!(select_action(&[1.0, 1.0, 0.0, 0.0], 0.0, &mut rng), 0);
    }

    #[test]
    fn full_exploration_is_uniform() {
        let mut rng = stream_rng(1, 0);
        let mut counts = [0usize; 4];
        for _ in 0..10_000 {
            counts[select_action(&[5.0, 0.0, 0.0, 0.0], 1.0, &mut rng)] += 1;
        }
        let expected = 2500.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 3 degrees of freedom, 99.9th percentile
        assert!(chi2 < 16.27, "chi2 {chi2} counts {counts:?}");
    }

    #[test]
    fn epsilon_schedule() {
        assert!((decay_epsilon(0.1, 0.01, 0.995) - 0.0995).abs() < 1e-15);
        assert_eq!(decay_epsilon(0.01, 0.01, 0.995), 0.01);
        let mut e = 0.1;
        for _ in 0..461 {
            e = decay_epsilon(e, 0.01, 0.995);
        }
        assert_eq!(e, 0.01);
        assert!(0.1 * 0.995f64.powi(459) > 0.01);
        assert!(0.1 * 0.995f64.powi(460) < 0.01);
    }

    #[test]
    fn td_target_examples() {
        let mut a = agent(AgentConfig::default());
        // force max next Q = 10 through the output bias
        for l in &mut a.target.layers {
            l.weight.fill(0.0);
        }
        a.target.layers[2].bias = Tensor::from_vec(&[4], vec![10.0, 2.0, -1.0, 0.0]).unwrap();
        let mut t = Transition {
            obs: vec![0.0; 3],
            action: 1,
            reward: -3.0,
            next_obs: vec![1.0; 3],
            terminal: false,
        };
        assert!((a.td_target(&t).unwrap() - 6.5).abs() < 1e-12);
        t.terminal = true;
        assert_eq!(a.td_target(&t).unwrap(), -3.0);
    }

    #[test]
    fn single_transition_regression_converges() {
        let mut a = agent(AgentConfig {
            clear_after_train: false,
            ..Default::default()
        });
        a.store(vec![1.0, 0.5, -0.5], 2, -40.0, vec![0.0; 3], true).unwrap();
        let y = -40.0 * a.config.reward_scale;
        for _ in 0..5000 {
            a.td_step().unwrap();
        }
        let q = a.q_values(&[1.0, 0.5, -0.5]).unwrap()[2];
        assert!((q - y).abs() < 1e-3, "{q} vs {y}");
    }

    #[test]
    fn train_event_decays_epsilon_and_clears() {
        let mut a = agent(AgentConfig::default());
        assert_eq!(a.train_event().unwrap(), None);
        assert_eq!(a.epsilon(), 0.1);
        for k in 0..40u32 {
            a.store(vec![0.1, 0.2, 0.3], 1, -1.0, vec![0.0; 3], false).unwrap();
            let before = a.epsilon();
            a.train_event().unwrap();
            assert!(a.epsilon() <= before);
            assert!(a.buffer().is_empty());
            assert!((a.epsilon() - epsilon_after(k + 1)).abs() < 1e-12);
        }
    }

    #[test]
    fn positive_reward_rejected() {
        let mut a = agent(AgentConfig::default());
        assert!(a.store(vec![0.0; 3], 0, 1.0, vec![0.0; 3], false).is_err());
        assert!(a.store(vec![0.0; 3], 9, -1.0, vec![0.0; 3], false).is_err());
    }

    #[test]
    fn q_network_gradient_matches_finite_differences() {
        let mut rng = stream_rng(3, 0);
        let mut a = Agent::new(AgentConfig::default(), 26, 4, 3, 0).unwrap();
        for l in &mut a.q.layers {
            let n = l.bias.len();
            l.bias = Tensor::uniform(&[n], 0.2, &mut rng);
        }
        let x: Vec<f64> = (0..26).map(|i| (i as f64 * 0.37).sin() * 3.0).collect();
        let target = [0.5, -1.0, 2.0, 0.0];
        let (y, cache) = a.q.forward_cached(&x).unwrap();
        let mut grad = a.q.zeros_like();
        a.q.backward(&cache, &crate::neural::mse_grad(&y, &target).unwrap(), &mut grad);
        let report = check_gradients(&a.q, &grad, |m: &Mlp| mse_loss(&m.forward(&x).unwrap(), &target).unwrap(), 1e-5);
        assert!(report.max_rel_error < 1e-4, "{report:?}");
    }

    #[test]
    fn checkpoint_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.json");
        let a = agent(AgentConfig::default());
        a.save(&p).unwrap();
        let mut b = Agent::new(AgentConfig::default(), 3, 4, 99, 1).unwrap();
        b.load(&p).unwrap();
        assert_eq!(a.q_network(), b.q_network());
    }

    proptest! {
        #[test]
        fn greedy_invariant_under_constant_shift(
            q in prop::collection::vec(-100.0f64..100.0, 2..8),
            c in -1e3f64..1e3,
        ) {
            let shifted: Vec<f64> = q.iter().map(|x| x + c).collect();
            // shifting may merge nearly-equal values through rounding; only
            // compare when the maximum is separated
            let best = argmax(&q);
            let margin = q.iter().enumerate().filter(|&(i, _)| i != best).map(|(_, v)| q[best] - v).fold(f64::INFINITY, f64::min);
            prop_assume!(margin > 1e-9);
            prop_assert_eq!(argmax(&shifted), best);
        }
    }
}
