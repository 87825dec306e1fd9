use std::path::Path;
use std::time::Instant;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::stats::{turning_counts, TurningCounts};
use super::{ControllerKind, ExperimentConfig, Scenario, TrainConfig};
use crate::agent::{assemble_observation, Agent};
use crate::baselines::{BaselineController, BaselineKind, SignalController};
use crate::multitask::{
    CoefMode, EpisodeTracker, HistoryBuffer, Indicators, LatentState, MtInput, MultiTask, Sample, TaskLosses,
    LATENT_DIM,
};
use crate::rng::{stream, stream_rng};
use crate::sim::{IntersectionId, Simulation};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub average_travel_time: f64,
    pub spawned: usize,
    pub completed: usize,
    /// Mean over agents of the summed per-epoch rewards.
    pub mean_reward: f64,
    /// Mean exploration rate over agents at the end of the episode.
    pub epsilon: f64,
    pub agent_rewards: Vec<f64>,
    pub agent_epsilons: Vec<f64>,
    /// Mean of the multitask losses over this episode's training events.
    pub mt_loss: Option<TaskLosses>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MtLossRecord {
    pub episode: usize,
    pub event: usize,
    pub losses: TaskLosses,
}

/// Everything recorded for one (controller, seed) run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub controller: ControllerKind,
    pub seed: u64,
    pub config_hash: String,
    pub episodes: Vec<EpisodeRecord>,
    /// Network queue total at the end of every decision epoch of the last
    /// episode.
    pub queue_series: Vec<f64>,
    /// Decisions per phase for every agent in the last episode.
    pub phase_counts: Vec<Vec<u64>>,
    pub turning: TurningCounts,
    pub mt_losses: Vec<MtLossRecord>,
    pub wall_clock_secs: f64,
}

impl RunRecord {
    pub fn final_att(&self) -> f64 {
        self.episodes.last().map_or(f64::NAN, |e| e.average_travel_time)
    }

    pub fn best_att(&self) -> f64 {
        self.episodes.iter().map(|e| e.average_travel_time).fold(f64::INFINITY, f64::min)
    }
}

/// Outcome of a single simulated episode.
#[derive(Clone, Debug)]
pub struct EpisodeTrace {
    pub average_travel_time: f64,
    pub spawned: usize,
    pub completed: usize,
    pub rewards: Vec<f64>,
    pub queue_series: Vec<f64>,
    pub phase_counts: Vec<Vec<u64>>,
    pub turning: TurningCounts,
    pub mt_losses: Vec<TaskLosses>,
}

fn epochs(horizon: u64, interval: u64) -> usize {
    horizon.div_ceil(interval) as usize
}

fn finish_trace(sim: &Simulation, scn: &Scenario, rewards: Vec<f64>, queue_series: Vec<f64>, phase_counts: Vec<Vec<u64>>) -> Result<EpisodeTrace> {
    let st = sim.state();
    Ok(EpisodeTrace {
        average_travel_time: sim.average_travel_time()?,
        spawned: st.spawned(),
        completed: st.completed().len(),
        rewards,
        queue_series,
        phase_counts,
        turning: turning_counts(&scn.net, &scn.routes, st.vehicles().iter().map(|v| v.route)),
        mt_losses: Vec::new(),
    })
}

fn empty_phase_counts(scn: &Scenario) -> Vec<Vec<u64>> {
    scn.net.intersections.iter().map(|i| vec![0; i.num_phases()]).collect()
}

/// Runs one episode under any non-learning controller, deciding every
/// `interval` seconds.
pub fn run_controller_episode(scn: &Scenario, seed: u64, controller: &mut dyn SignalController, interval: u64) -> Result<EpisodeTrace> {
    let mut sim = Simulation::new(scn.net.clone(), scn.routes.clone(), &scn.flow, seed)?;
    let n = scn.num_intersections();
    let mut rewards = vec![0.0; n];
    let mut queue_series = Vec::new();
    let mut phase_counts = empty_phase_counts(scn);
    while !sim.done() {
        let actions = controller.decide(sim.state());
        for (c, &a) in phase_counts.iter_mut().zip(&actions) {
            c[a] += 1;
        }
        sim.step_interval(&actions, interval)?;
        for (i, r) in rewards.iter_mut().enumerate() {
            *r += sim.state().reward(IntersectionId(i))?;
        }
        queue_series.push(sim.state().queue_total() as f64);
    }
    finish_trace(&sim, scn, rewards, queue_series, phase_counts)
}

/// FixedTime / SOTL / MaxPressure controller for `kind`, with FixedTime
/// offsets drawn from the seed.
pub fn baseline_controller(config: &ExperimentConfig, scn: &Scenario, kind: BaselineKind, seed: u64) -> Result<BaselineController> {
    let cc = config.baseline.controller_config(kind);
    let mut c = BaselineController::new(cc, &scn.net)?;
    if kind == BaselineKind::FixedTime {
        let interval = config.train.action_interval;
        let mut rng = stream_rng(seed, stream::FIXED_TIME_OFFSET);
        let offsets = scn
            .net
            .intersections
            .iter()
            .map(|is| {
                let cycle = is.num_phases() as u64 * cc.fixed_phase_duration;
                interval * rng.random_range(0..cycle.div_ceil(interval).max(1))
            })
            .collect();
        c = c.with_offsets(offsets);
    }
    Ok(c)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EpisodeMode {
    /// ε-greedy acting, storing transitions and training on schedule.
    Train,
    /// Greedy acting, no learning.
    Greedy,
}

/// Policies (one per intersection, or one shared) plus the optional
/// multitask network, configured for one ablation variant.
pub struct Learner {
    pub kind: ControllerKind,
    pub agents: Vec<Agent>,
    pub multitask: Option<MultiTask>,
    shared: bool,
    obs_coef: (f64, f64),
    raw_features: bool,
    tau: usize,
    train: TrainConfig,
}

impl Learner {
    pub fn new(kind: ControllerKind, train: &TrainConfig, scn: &Scenario, seed: u64) -> Result<Self> {
        if !kind.is_learned() {
            return Err(Error::Config(format!("{kind} is not a learning controller")));
        }
        train.validate()?;
        let uses = match kind {
            ControllerKind::BaseShr => (true, false),
            ControllerKind::BaseSpe => (false, true),
            ControllerKind::Mtlight => (true, true),
            _ => (false, false),
        };
        let mt_enabled = train.multitask_enabled.unwrap_or(uses.0 || uses.1);
        let coef = |used: bool, c: f64| match (used, train.coef_mode) {
            (false, _) => 0.0,
            (true, CoefMode::ObservationScale) => c,
            (true, CoefMode::LossWeight) => 1.0,
        };
        let obs_coef = (coef(uses.0, train.coef_shr), coef(uses.1, train.coef_spe));
        let raw_features = kind == ControllerKind::BaseRaw;
        let tau = train.multitask.tau;

        let obs_dims: Vec<(usize, usize)> = scn
            .net
            .intersections
            .iter()
            .map(|is| (is.incoming.len() + is.num_phases(), is.num_phases()))
            .collect();
        let homogeneous = obs_dims.windows(2).all(|w| w[0] == w[1]);
        if (mt_enabled || train.share_policy) && !homogeneous {
            return Err(Error::Config(
                "multitask network and shared policies need intersections with identical lane and phase counts".into(),
            ));
        }
        let extra = if raw_features { 4 * tau } else { 0 };
        let n_policies = if train.share_policy { 1 } else { obs_dims.len() };
        let agents = (0..n_policies)
            .map(|i| {
                let (obs, k) = obs_dims[i];
                Agent::new(train.agent.clone(), obs + 2 * LATENT_DIM + extra, k, seed, i as u64)
            })
            .collect::<Result<Vec<_>>>()?;
        let multitask = if mt_enabled {
            let mut mt = MultiTask::new(train.multitask.clone(), obs_dims.len(), obs_dims[0].0, seed)?;
            if train.coef_mode == CoefMode::LossWeight {
                mt.set_grad_weights(train.coef_shr, train.coef_spe);
            }
            Some(mt)
        } else {
            None
        };
        Ok(Learner {
            kind,
            agents,
            multitask,
            shared: train.share_policy,
            obs_coef,
            raw_features,
            tau,
            train: train.clone(),
        })
    }

    fn policy(&self, i: usize) -> usize {
        if self.shared {
            0
        } else {
            i
        }
    }

    pub fn run_episode(&mut self, scn: &Scenario, seed: u64, mode: EpisodeMode) -> Result<EpisodeTrace> {
        let train = mode == EpisodeMode::Train;
        let interval = self.train.action_interval;
        let n_epochs = epochs(scn.horizon(), interval);
        let n = scn.num_intersections();
        let mut sim = Simulation::new(scn.net.clone(), scn.routes.clone(), &scn.flow, seed)?;
        if let Some(mt) = self.multitask.as_mut() {
            mt.reset_episode();
        }
        let mut history = HistoryBuffer::new(self.tau);
        let mut tracker = EpisodeTracker::new();
        let mut prev: Vec<Option<(Vec<f64>, usize)>> = vec![None; n];
        let mut last_reward = vec![0.0; n];
        let mut rewards = vec![0.0; n];
        let mut queue_series = Vec::with_capacity(n_epochs);
        let mut phase_counts = empty_phase_counts(scn);
        let mut pending: Vec<Sample> = Vec::new();
        let mut mt_losses = Vec::new();

        for k in 0..=n_epochs {
            let state = sim.state();
            let mut obs = Vec::with_capacity(n);
            for i in 0..n {
                let raw = state.raw_observation(IntersectionId(i))?;
                let latent = match self.multitask.as_mut() {
                    Some(mt) => {
                        let input = MtInput::new(&raw.lane_counts, &raw.phase, &history.windows());
                        let h_prev = mt.forward_agent(i, &input)?;
                        if train && k < n_epochs && tracker.epochs() > 0 {
                            pending.push(Sample {
                                input,
                                h_prev,
                                targets: tracker.targets(0.0, state.active() as f64),
                            });
                        }
                        mt.latent_for_agent(i)?.clone()
                    }
                    None => LatentState::zeros(),
                };
                let mut e = assemble_observation(&raw.to_vec(), &latent, self.obs_coef.0, self.obs_coef.1)?;
                if self.raw_features {
                    e.extra = history.features();
                }
                obs.push(e.to_vec());
            }

            if train && k > 0 {
                for (i, o) in obs.iter().enumerate() {
                    let (po, pa) = prev[i].take().expect("previous decision recorded");
                    let p = self.policy(i);
                    self.agents[p].store(po, pa, last_reward[i], o.clone(), false)?;
                }
                if k % self.train.t_p == 0 {
                    for a in &mut self.agents {
                        a.train_event()?;
                    }
                }
                if k % self.train.t_m == 0 {
                    if let Some(l) = self.multitask.as_mut().map(|mt| mt.train()).transpose()?.flatten() {
                        mt_losses.push(l);
                    }
                }
            }
            if k == n_epochs {
                break;
            }

            let mut actions = Vec::with_capacity(n);
            for (i, o) in obs.iter().enumerate() {
                let p = self.policy(i);
                let a = if train { self.agents[p].act(o)? } else { self.agents[p].act_greedy(o)? };
                phase_counts[i][a] += 1;
                actions.push(a);
            }
            let report = sim.step_interval(&actions, interval)?;
            let st = sim.state();
            for i in 0..n {
                last_reward[i] = st.reward(IntersectionId(i))?;
                rewards[i] += last_reward[i];
            }
            let queue = st.queue_total() as f64;
            queue_series.push(queue);
            if let Some(mt) = self.multitask.as_mut() {
                for mut s in pending.drain(..) {
                    s.targets.next_queue = queue / n as f64;
                    mt.push_sample(s);
                }
            }
            history.push(Indicators {
                incoming: report.entered as f64,
                travel_time: st.mean_trip_time(None),
                queue,
                on_road: st.active() as f64,
            });
            tracker.record_epoch_arrivals(report.spawned as u64);
            let seen = tracker.trips_seen();
            tracker.record_trips(st.completed()[seen..].iter().map(|t| t.duration()));
            for (p, (o, a)) in prev.iter_mut().zip(obs.into_iter().zip(actions)) {
                *p = Some((o, a));
            }
        }
        let mut trace = finish_trace(&sim, scn, rewards, queue_series, phase_counts)?;
        trace.mt_losses = mt_losses;
        Ok(trace)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (i, a) in self.agents.iter().enumerate() {
            a.save(&dir.join(format!("agent_{i}.json")))?;
        }
        if let Some(mt) = &self.multitask {
            mt.save(&dir.join("multitask.json"))?;
        }
        Ok(())
    }

    pub fn load(&mut self, dir: &Path) -> Result<()> {
        for (i, a) in self.agents.iter_mut().enumerate() {
            let p = dir.join(format!("agent_{i}.json"));
            if !p.exists() {
                return Err(Error::Config(format!("missing checkpoint {}", p.display())));
            }
            a.load(&p)?;
        }
        if let Some(mt) = self.multitask.as_mut() {
            let p = dir.join("multitask.json");
            if !p.exists() {
                return Err(Error::Config(format!("missing checkpoint {}", p.display())));
            }
            mt.load(&p)?;
        }
        Ok(())
    }
}

fn episode_record(episode: usize, trace: &EpisodeTrace, epsilons: Vec<f64>) -> EpisodeRecord {
    let mt_loss = (!trace.mt_losses.is_empty()).then(|| {
        let n = trace.mt_losses.len() as f64;
        let mut acc = [0.0; 4];
        for l in &trace.mt_losses {
            for (a, v) in acc.iter_mut().zip(l.as_array()) {
                *a += v / n;
            }
        }
        TaskLosses {
            flow: acc[0],
            travel: acc[1],
            queue: acc[2],
            on_road: acc[3],
        }
    });
    EpisodeRecord {
        episode,
        average_travel_time: trace.average_travel_time,
        spawned: trace.spawned,
        completed: trace.completed,
        mean_reward: trace.rewards.iter().sum::<f64>() / trace.rewards.len().max(1) as f64,
        epsilon: epsilons.iter().sum::<f64>() / epsilons.len().max(1) as f64,
        agent_rewards: trace.rewards.clone(),
        agent_epsilons: epsilons,
        mt_loss,
    }
}

/// Trains (or, for baselines, runs) one seed. Returns the record and, for
/// learned controllers, the trained learner.
pub fn run_seed(config: &ExperimentConfig, scn: &Scenario, seed: u64) -> Result<(RunRecord, Option<Learner>)> {
    let start = Instant::now();
    let hash = config.config_hash();
    let make = |episodes, last: EpisodeTrace, mt_losses| RunRecord {
        controller: config.controller,
        seed,
        config_hash: hash.clone(),
        episodes,
        queue_series: last.queue_series,
        phase_counts: last.phase_counts,
        turning: last.turning,
        mt_losses,
        wall_clock_secs: start.elapsed().as_secs_f64(),
    };
    if let Some(kind) = config.controller.baseline() {
        let mut c = baseline_controller(config, scn, kind, seed)?;
        let trace = run_controller_episode(scn, seed, &mut c, config.train.action_interval)?;
        let rec = episode_record(0, &trace, Vec::new());
        return Ok((make(vec![rec], trace, Vec::new()), None));
    }
    let mut learner = Learner::new(config.controller, &config.train, scn, seed)?;
    let mut episodes = Vec::with_capacity(config.episodes);
    let mut mt_log = Vec::new();
    let mut last = None;
    for ep in 0..config.episodes {
        let trace = learner.run_episode(scn, seed, EpisodeMode::Train)?;
        for (event, l) in trace.mt_losses.iter().enumerate() {
            mt_log.push(MtLossRecord {
                episode: ep,
                event,
                losses: *l,
            });
        }
        let eps = learner.agents.iter().map(Agent::epsilon).collect();
        episodes.push(episode_record(ep, &trace, eps));
        log::info!(
            "{} seed {seed} episode {ep}: att {:.2}",
            config.controller,
            trace.average_travel_time
        );
        last = Some(trace);
    }
    let last = last.expect("at least one episode");
    Ok((make(episodes, last, mt_log), Some(learner)))
}

/// Runs every seed of the experiment.
pub fn run_training(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    config.validate()?;
    let scn = Scenario::build(&config.scenario)?;
    config.seeds.iter().map(|&s| Ok(run_seed(config, &scn, s)?.0)).collect()
}

/// Average travel time of one deterministic episode: a baseline, or a
/// learned controller acting greedily from `learner`.
pub fn evaluate_controller(config: &ExperimentConfig, scn: &Scenario, seed: u64, learner: Option<&mut Learner>) -> Result<f64> {
    match (config.controller.baseline(), learner) {
        (Some(kind), _) => {
            let mut c = baseline_controller(config, scn, kind, seed)?;
            Ok(run_controller_episode(scn, seed, &mut c, config.train.action_interval)?.average_travel_time)
        }
        (None, Some(l)) => Ok(l.run_episode(scn, seed, EpisodeMode::Greedy)?.average_travel_time),
        (None, None) => Err(Error::Config(format!(
            "evaluating {} requires a trained checkpoint",
            config.controller
        ))),
    }
}

/// Arithmetic mean.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}
