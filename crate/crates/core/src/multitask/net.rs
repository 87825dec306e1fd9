use rand::Rng;
use serde::{Deserialize, Serialize};

use super::LATENT_DIM;
use crate::neural::{join, relu, relu_backward, Gru, GruCache, Linear, Parameters, Tensor};
use crate::{Error, Result};

/// Output arity of the flow, travel, queue and on-road heads.
pub const TASK_ARITY: [usize; 4] = [2, 2, 1, 1];

/// One agent's network input: counts compressed by `INPUT_LOG_SCALE * ln(1 + x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MtInput {
    /// Lane counts followed by the one-hot phase.
    pub obs: Vec<f64>,
    /// Incoming, travel, queue and on-road windows.
    pub histories: [Vec<f64>; 4],
}

/// Multiplier applied after `ln(1 + x)` so that counts up to a few hundred
/// map into roughly [0, 1].
pub const INPUT_LOG_SCALE: f64 = 0.2;

fn compress(x: f64) -> f64 {
    INPUT_LOG_SCALE * x.ln_1p()
}

impl MtInput {
    pub fn new(lane_counts: &[f64], phase: &[f64], histories: &[Vec<f64>; 4]) -> Self {
        let mut obs: Vec<f64> = lane_counts.iter().map(|&x| compress(x)).collect();
        obs.extend_from_slice(phase);
        MtInput {
            obs,
            histories: histories.clone().map(|h| h.into_iter().map(compress).collect()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiTaskNet {
    pub embed_obs: Linear,
    pub embed_hist: Vec<Linear>,
    pub shared1: Linear,
    pub shared2: Linear,
    pub gru: Gru,
    pub post: Linear,
    pub branches: Vec<Linear>,
    pub heads: Vec<Linear>,
    pub spe_proj: Linear,
}

#[derive(Clone, Debug)]
pub struct MtOutput {
    pub hidden: Vec<f64>,
    pub o_shr: Vec<f64>,
    pub o_spe: Vec<f64>,
    /// Normalized predictions per task, arities [`TASK_ARITY`].
    pub preds: [Vec<f64>; 4],
}

#[derive(Clone, Debug)]
pub struct MtCache {
    input: MtInput,
    embeds: Vec<Vec<f64>>,
    concat: Vec<f64>,
    s1: Vec<f64>,
    s2: Vec<f64>,
    gru: GruCache,
    hidden: Vec<f64>,
    o_shr: Vec<f64>,
    branch_acts: Vec<Vec<f64>>,
}

impl MultiTaskNet {
    pub fn new(
        obs_dim: usize,
        tau: usize,
        embed_dim: usize,
        shared_dim: usize,
        gru_hidden: usize,
        branch_dim: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let embed_obs = Linear::new(obs_dim, embed_dim, rng);
        let embed_hist = (0..4).map(|_| Linear::new(tau, embed_dim, rng)).collect();
        let shared1 = Linear::new(5 * embed_dim, shared_dim, rng);
        let shared2 = Linear::new(shared_dim, shared_dim, rng);
        let gru = Gru::new(shared_dim, gru_hidden, rng);
        let post = Linear::new(gru_hidden, LATENT_DIM, rng);
        let branches = (0..4).map(|_| Linear::new(LATENT_DIM, branch_dim, rng)).collect();
        let heads = TASK_ARITY.iter().map(|&a| Linear::new(branch_dim, a, rng)).collect();
        let spe_proj = Linear::new(4 * branch_dim, LATENT_DIM, rng);
        MultiTaskNet {
            embed_obs,
            embed_hist,
            shared1,
            shared2,
            gru,
            post,
            branches,
            heads,
            spe_proj,
        }
    }

    pub fn obs_dim(&self) -> usize {
        self.embed_obs.input_dim()
    }

    pub fn tau(&self) -> usize {
        self.embed_hist[0].input_dim()
    }

    pub fn hidden_dim(&self) -> usize {
        self.gru.hidden_dim()
    }

    /// Embeds the observation and each history, then concatenates in the
    /// order obs, incoming, travel, queue, on-road.
    pub fn embed(&self, input: &MtInput) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
        let mut embeds = Vec::with_capacity(5);
        let mut e = self.embed_obs.forward(&input.obs)?;
        relu(&mut e);
        embeds.push(e);
        for (layer, h) in self.embed_hist.iter().zip(&input.histories) {
            let mut e = layer.forward(h)?;
            relu(&mut e);
            embeds.push(e);
        }
        let concat = embeds.concat();
        Ok((embeds, concat))
    }

    pub fn forward(&self, input: &MtInput, h_prev: &[f64]) -> Result<(MtOutput, MtCache)> {
        let (embeds, concat) = self.embed(input)?;
        let mut s1 = self.shared1.forward(&concat)?;
        relu(&mut s1);
        let mut s2 = self.shared2.forward(&s1)?;
        relu(&mut s2);
        let (hidden, gru) = self.gru.step(&s2, h_prev)?;
        let o_shr: Vec<f64> = self.post.forward(&hidden)?.into_iter().map(f64::tanh).collect();

        let mut branch_acts = Vec::with_capacity(4);
        let mut preds: [Vec<f64>; 4] = Default::default();
        for (k, (branch, head)) in self.branches.iter().zip(&self.heads).enumerate() {
            let mut b = branch.forward(&o_shr)?;
            relu(&mut b);
            preds[k] = head.forward(&b)?;
            branch_acts.push(b);
        }
        let o_spe = self.spe_proj.forward(&branch_acts.concat())?;
        let out = MtOutput {
            hidden: hidden.clone(),
            o_shr: o_shr.clone(),
            o_spe,
            preds,
        };
        let cache = MtCache {
            input: input.clone(),
            embeds,
            concat,
            s1,
            s2,
            gru,
            hidden,
            o_shr,
            branch_acts,
        };
        Ok((out, cache))
    }

    /// Accumulates into `grad` the gradient of a loss whose derivative with
    /// respect to each head's output is `dpreds`. The hidden state entering
    /// the GRU is treated as a constant, and `spe_proj` receives no
    /// gradient because no loss depends on `o_spe`.
    pub fn backward(&self, cache: &MtCache, dpreds: &[Vec<f64>; 4], grad: &mut MultiTaskNet) {
        let mut d_shr = vec![0.0; LATENT_DIM];
        for k in 0..4 {
            if dpreds[k].iter().all(|&d| d == 0.0) {
                continue;
            }
            let b = &cache.branch_acts[k];
            let mut db = self.heads[k].backward(b, &dpreds[k], &mut grad.heads[k]);
            relu_backward(b, &mut db);
            let dx = self.branches[k].backward(&cache.o_shr, &db, &mut grad.branches[k]);
            for (a, d) in d_shr.iter_mut().zip(dx) {
                *a += d;
            }
        }
        for (d, o) in d_shr.iter_mut().zip(&cache.o_shr) {
            *d *= 1.0 - o * o;
        }
        let dh = self.post.backward(&cache.hidden, &d_shr, &mut grad.post);
        let (mut ds2, _) = self.gru.backward(&cache.gru, &dh, &mut grad.gru);
        relu_backward(&cache.s2, &mut ds2);
        let mut ds1 = self.shared2.backward(&cache.s1, &ds2, &mut grad.shared2);
        relu_backward(&cache.s1, &mut ds1);
        let dcat = self.shared1.backward(&cache.concat, &ds1, &mut grad.shared1);

        let e = self.embed_obs.output_dim();
        for (k, chunk) in dcat.chunks(e).enumerate() {
            let mut d = chunk.to_vec();
            relu_backward(&cache.embeds[k], &mut d);
            if d.iter().all(|&v| v == 0.0) {
                continue;
            }
            if k == 0 {
                self.embed_obs.backward(&cache.input.obs, &d, &mut grad.embed_obs);
            } else {
                self.embed_hist[k - 1].backward(&cache.input.histories[k - 1], &d, &mut grad.embed_hist[k - 1]);
            }
        }
    }

    pub fn check_input(&self, input: &MtInput) -> Result<()> {
        if input.obs.len() != self.obs_dim() || input.histories.iter().any(|h| h.len() != self.tau()) {
            return Err(Error::Shape(format!(
                "multitask input expects obs {} and histories of {}, got {} and {:?}",
                self.obs_dim(),
                self.tau(),
                input.obs.len(),
                input.histories.iter().map(Vec::len).collect::<Vec<_>>()
            )));
        }
        Ok(())
    }
}

impl Parameters for MultiTaskNet {
    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, &'a Tensor)) {
        self.embed_obs.visit(&join(prefix, "embed_obs"), f);
        for (i, l) in self.embed_hist.iter().enumerate() {
            l.visit(&join(prefix, &format!("embed_hist.{i}")), f);
        }
        self.shared1.visit(&join(prefix, "shared1"), f);
        self.shared2.visit(&join(prefix, "shared2"), f);
        self.gru.visit(&join(prefix, "gru"), f);
        self.post.visit(&join(prefix, "post"), f);
        for (i, l) in self.branches.iter().enumerate() {
            l.visit(&join(prefix, &format!("branches.{i}")), f);
        }
        for (i, l) in self.heads.iter().enumerate() {
            l.visit(&join(prefix, &format!("heads.{i}")), f);
        }
        self.spe_proj.visit(&join(prefix, "spe_proj"), f);
    }

    fn visit_mut<'a>(&'a mut self, prefix: &str, f: &mut dyn FnMut(String, &'a mut Tensor)) {
        self.embed_obs.visit_mut(&join(prefix, "embed_obs"), f);
        for (i, l) in self.embed_hist.iter_mut().enumerate() {
            l.visit_mut(&join(prefix, &format!("embed_hist.{i}")), f);
        }
        self.shared1.visit_mut(&join(prefix, "shared1"), f);
        self.shared2.visit_mut(&join(prefix, "shared2"), f);
        self.gru.visit_mut(&join(prefix, "gru"), f);
        self.post.visit_mut(&join(prefix, "post"), f);
        for (i, l) in self.branches.iter_mut().enumerate() {
            l.visit_mut(&join(prefix, &format!("branches.{i}")), f);
        }
        for (i, l) in self.heads.iter_mut().enumerate() {
            l.visit_mut(&join(prefix, &format!("heads.{i}")), f);
        }
        self.spe_proj.visit_mut(&join(prefix, "spe_proj"), f);
    }
}
