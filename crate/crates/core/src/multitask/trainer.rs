use std::collections::VecDeque;
use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{MtInput, MultiTaskNet, TaskTargets, TargetNormalizer, LATENT_DIM};
use crate::neural::{mse_grad, mse_loss, Checkpoint, Optimizer, Parameters};
use crate::rng::{stream, stream_rng, Rng};
use crate::scenario::{read_json, write_json};
use crate::{Error, Result};

/// How the two latent coefficients are applied.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefMode {
    /// Multiply `o_shr` / `o_spe` before they enter the policy observation.
    #[default]
    ObservationScale,
    /// Leave the latents unscaled and instead weight the multitask
    /// gradients of the shared trunk / task branches.
    LossWeight,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MultiTaskConfig {
    pub tau: usize,
    pub embed_dim: usize,
    pub shared_dim: usize,
    pub gru_hidden: usize,
    pub branch_dim: usize,
    pub lr: f64,
    pub batch_size: usize,
    /// Adam steps per multitask training event.
    pub steps_per_train: usize,
    /// Most recent samples kept for training.
    pub sample_capacity: usize,
}

impl Default for MultiTaskConfig {
    fn default() -> Self {
        MultiTaskConfig {
            tau: 10,
            embed_dim: 16,
            shared_dim: 64,
            gru_hidden: 64,
            branch_dim: 16,
            lr: 0.01,
            batch_size: 32,
            steps_per_train: 4,
            sample_capacity: 4096,
        }
    }
}

impl MultiTaskConfig {
    pub fn validate(&self) -> Result<()> {
        let dims = [self.tau, self.embed_dim, self.shared_dim, self.gru_hidden, self.branch_dim, self.batch_size];
        if dims.contains(&0) || self.sample_capacity == 0 {
            return Err(Error::Config("multitask dimensions and batch size must be positive".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("multitask learning rate {} must be positive", self.lr)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatentState {
    pub o_shr: Vec<f64>,
    pub o_spe: Vec<f64>,
}

impl LatentState {
    pub fn zeros() -> Self {
        LatentState {
            o_shr: vec![0.0; LATENT_DIM],
            o_spe: vec![0.0; LATENT_DIM],
        }
    }
}

/// A training example: input, the GRU state it was evaluated with, and the
/// raw (unnormalized) targets.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Sample {
    pub input: MtInput,
    pub h_prev: Vec<f64>,
    pub targets: TaskTargets,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskLosses {
    pub flow: f64,
    pub travel: f64,
    pub queue: f64,
    pub on_road: f64,
}

impl TaskLosses {
    pub fn total(&self) -> f64 {
        self.flow + self.travel + self.queue + self.on_road
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.flow, self.travel, self.queue, self.on_road]
    }
}

#[derive(Serialize, Deserialize)]
struct MultiTaskCheckpoint {
    params: Checkpoint,
    hidden: Vec<Vec<f64>>,
    normalizer: TargetNormalizer,
}

/// One multitask network shared by all agents, with a GRU hidden state and
/// a latent cache per agent.
pub struct MultiTask {
    config: MultiTaskConfig,
    net: MultiTaskNet,
    optimizer: Optimizer,
    normalizer: TargetNormalizer,
    hidden: Vec<Vec<f64>>,
    latents: Vec<Option<LatentState>>,
    samples: VecDeque<Sample>,
    grad_weights: (f64, f64),
    batch_rng: Rng,
}

impl MultiTask {
    pub fn new(config: MultiTaskConfig, num_agents: usize, obs_dim: usize, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut init = stream_rng(seed, stream::MULTITASK_INIT);
        let net = MultiTaskNet::new(
            obs_dim,
            config.tau,
            config.embed_dim,
            config.shared_dim,
            config.gru_hidden,
            config.branch_dim,
            &mut init,
        );
        Ok(MultiTask {
            optimizer: Optimizer::adam(config.lr),
            normalizer: TargetNormalizer::default(),
            hidden: vec![vec![0.0; config.gru_hidden]; num_agents],
            latents: vec![None; num_agents],
            samples: VecDeque::new(),
            grad_weights: (1.0, 1.0),
            batch_rng: stream_rng(seed, stream::MULTITASK_BATCH),
            config,
            net,
        })
    }

    pub fn config(&self) -> &MultiTaskConfig {
        &self.config
    }

    pub fn net(&self) -> &MultiTaskNet {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut MultiTaskNet {
        &mut self.net
    }

    pub fn normalizer(&self) -> &TargetNormalizer {
        &self.normalizer
    }

    pub fn optimizer_steps(&self) -> u64 {
        self.optimizer.steps()
    }

    /// Scales trunk and branch gradients (loss-weight coefficient mode).
    pub fn set_grad_weights(&mut self, shared: f64, specific: f64) {
        self.grad_weights = (shared, specific);
    }

    /// Zeroes every agent's GRU state and drops cached latents.
    pub fn reset_episode(&mut self) {
        for h in &mut self.hidden {
            h.iter_mut().for_each(|x| *x = 0.0);
        }
        self.latents.iter_mut().for_each(|l| *l = None);
    }

    pub fn hidden_state(&self, agent: usize) -> &[f64] {
        &self.hidden[agent]
    }

    /// Runs the network for one agent, advancing its hidden state and
    /// caching the latents. Returns the hidden state the step started from.
    pub fn forward_agent(&mut self, agent: usize, input: &MtInput) -> Result<Vec<f64>> {
        if agent >= self.hidden.len() {
            return Err(Error::Contract(format!("agent {agent} out of range")));
        }
        self.net.check_input(input)?;
        let (out, _) = self.net.forward(input, &self.hidden[agent])?;
        if !out.o_shr.iter().chain(&out.o_spe).all(|x| x.is_finite()) {
            return Err(Error::NonFinite(format!("latent state of agent {agent}")));
        }
        let h_prev = std::mem::replace(&mut self.hidden[agent], out.hidden);
        self.latents[agent] = Some(LatentState {
            o_shr: out.o_shr,
            o_spe: out.o_spe,
        });
        Ok(h_prev)
    }

    pub fn latent_for_agent(&self, agent: usize) -> Result<&LatentState> {
        self.latents
            .get(agent)
            .and_then(Option::as_ref)
            .ok_or_else(|| Error::Contract(format!("no multitask forward has run for agent {agent} this episode")))
    }

    pub fn push_sample(&mut self, sample: Sample) {
        self.normalizer.observe(&sample.targets);
        if self.samples.len() == self.config.sample_capacity {
            self.samples.pop_front();
        }
        self.samples.push_back(sample);
    }

    pub fn samples(&self) -> &VecDeque<Sample> {
        &self.samples
    }

    /// Mean per-task losses on normalized targets and their gradient.
    pub fn loss_and_grad(&self, batch: &[&Sample]) -> Result<(TaskLosses, MultiTaskNet)> {
        self.losses(batch, true).map(|(l, g)| (l, g.expect("gradient requested")))
    }

    pub fn evaluate(&self, batch: &[&Sample]) -> Result<TaskLosses> {
        Ok(self.losses(batch, false)?.0)
    }

    fn losses(&self, batch: &[&Sample], want_grad: bool) -> Result<(TaskLosses, Option<MultiTaskNet>)> {
        if batch.is_empty() {
            return Err(Error::Contract("multitask batch is empty".into()));
        }
        let n = batch.len() as f64;
        let n_travel = batch.iter().filter(|s| s.targets.travel_valid).count() as f64;
        let mut grad = want_grad.then(|| self.net.zeros_like());
        let mut sums = [0.0; 4];
        for s in batch {
            let (out, cache) = self.net.forward(&s.input, &s.h_prev)?;
            let z = self.normalizer.normalize(&s.targets);
            let targets: [&[f64]; 4] = [&z[0..2], &z[2..4], &z[4..5], &z[5..6]];
            let mut dpreds: [Vec<f64>; 4] = Default::default();
            for k in 0..4 {
                let denom = if k == 1 { n_travel } else { n };
                if k == 1 && !s.targets.travel_valid {
                    dpreds[k] = vec![0.0; 2];
                    continue;
                }
                sums[k] += mse_loss(&out.preds[k], targets[k])? / denom;
                dpreds[k] = mse_grad(&out.preds[k], targets[k])?.into_iter().map(|g| g / denom).collect();
            }
            if let Some(g) = grad.as_mut() {
                self.net.backward(&cache, &dpreds, g);
            }
        }
        let losses = TaskLosses {
            flow: sums[0],
            travel: sums[1],
            queue: sums[2],
            on_road: sums[3],
        };
        if !losses.total().is_finite() {
            return Err(Error::NonFinite("multitask loss".into()));
        }
        if let Some(g) = grad.as_mut() {
            let (ws, wp) = self.grad_weights;
            if (ws, wp) != (1.0, 1.0) {
                for l in g.branches.iter_mut().chain(g.heads.iter_mut()) {
                    l.scale(wp);
                }
                for l in std::iter::once(&mut g.embed_obs)
                    .chain(g.embed_hist.iter_mut())
                    .chain([&mut g.shared1, &mut g.shared2, &mut g.post])
                {
                    l.scale(ws);
                }
                g.gru.scale(ws);
            }
        }
        Ok((losses, grad))
    }

    /// One Adam step on `batch`; returns the losses before the update.
    pub fn train_step(&mut self, batch: &[&Sample]) -> Result<TaskLosses> {
        let (losses, grad) = self.loss_and_grad(batch)?;
        self.optimizer.step(&mut self.net, &grad)?;
        Ok(losses)
    }

    /// `steps_per_train` Adam steps on minibatches drawn uniformly with
    /// replacement from the sample store. Returns the mean pre-update
    /// losses, or None when no samples are stored.
    pub fn train(&mut self) -> Result<Option<TaskLosses>> {
        if self.samples.is_empty() {
            return Ok(None);
        }
        let mut acc = [0.0; 4];
        for _ in 0..self.config.steps_per_train {
            let idx: Vec<usize> = (0..self.config.batch_size)
                .map(|_| self.batch_rng.random_range(0..self.samples.len()))
                .collect();
            let batch: Vec<&Sample> = idx.iter().map(|&i| &self.samples[i]).collect();
            let (losses, grad) = self.loss_and_grad(&batch)?;
            self.optimizer.step(&mut self.net, &grad)?;
            for (a, l) in acc.iter_mut().zip(losses.as_array()) {
                *a += l / self.config.steps_per_train as f64;
            }
        }
        Ok(Some(TaskLosses {
            flow: acc[0],
            travel: acc[1],
            queue: acc[2],
            on_road: acc[3],
        }))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let ck = MultiTaskCheckpoint {
            params: Checkpoint::capture("multitask", &self.net),
            hidden: self.hidden.clone(),
            normalizer: self.normalizer.clone(),
        };
        if !self.net.all_finite() {
            return Err(Error::NonFinite("multitask parameters".into()));
        }
        write_json(path, &ck)
    }

    pub fn load(&mut self, path: &Path) -> Result<()> {
        let ck: MultiTaskCheckpoint = read_json(path)?;
        if ck.hidden.len() != self.hidden.len() || ck.hidden.iter().any(|h| h.len() != self.config.gru_hidden) {
            return Err(Error::Shape("checkpoint hidden states do not match the agent count".into()));
        }
        ck.params.restore("multitask", &mut self.net)?;
        self.hidden = ck.hidden;
        self.normalizer = ck.normalizer;
        Ok(())
    }
}
