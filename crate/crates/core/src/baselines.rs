//! Classical controllers: FixedTime, SOTL and MaxPressure.

use serde::{Deserialize, Serialize};

use crate::sim::{IntersectionId, RoadNetwork, SimState};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    FixedTime,
    Sotl,
    MaxPressure,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    pub kind: BaselineKind,
    /// Seconds each phase is held by FixedTime.
    pub fixed_phase_duration: u64,
    /// Waiting vehicles on the next phase's lanes that make SOTL switch.
    pub sotl_threshold: usize,
}

impl ControllerConfig {
    pub fn new(kind: BaselineKind) -> Self {
        ControllerConfig {
            kind,
            fixed_phase_duration: 30,
            sotl_threshold: 5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.fixed_phase_duration == 0 {
            return Err(Error::Config("fixed phase duration must be positive".into()));
        }
        if self.sotl_threshold == 0 {
            return Err(Error::Config("SOTL threshold must be at least 1".into()));
        }
        Ok(())
    }
}

/// Phase of a fixed cycle: `floor((clock + offset) / duration) mod K`.
pub fn fixed_time_decide(num_phases: usize, clock: u64, duration: u64, offset: u64) -> usize {
    (((clock + offset) / duration) % num_phases as u64) as usize
}

/// Phase under a cyclic plan with per-phase green times (zero skips a
/// phase). Returns `None` for an all-zero plan.
pub fn fixed_plan_decide(plan: &[u64], clock: u64, offset: u64) -> Option<usize> {
    let cycle: u64 = plan.iter().sum();
    if cycle == 0 {
        return None;
    }
    let mut t = (clock + offset) % cycle;
    for (k, &d) in plan.iter().enumerate() {
        if t < d {
            return Some(k);
        }
        t -= d;
    }
    unreachable!("t < cycle")
}

/// Advance to the next phase once the vehicles waiting on its lanes reach
/// the threshold; otherwise hold.
pub fn sotl_decide(state: &SimState, i: IntersectionId, threshold: usize) -> usize {
    let is = state.network().intersection(i);
    let current = state.current_phase(i);
    let next = (current + 1) % is.num_phases();
    let waiting: usize = is
        .phase_lanes(next)
        .map(|l| state.queue_length(l).expect("lane of this network"))
        .sum();
    if waiting >= threshold {
        next
    } else {
        current
    }
}

/// Sum over the phase's movements of incoming minus outgoing density.
pub fn pressure(state: &SimState, i: IntersectionId, phase: usize) -> f64 {
    state.network().intersection(i).phases[phase]
        .movements
        .iter()
        .map(|&(a, b)| state.lane_density(a) - state.lane_density(b))
        .sum()
}

/// Phase with the largest pressure; ties go to the lowest index.
pub fn max_pressure_decide(state: &SimState, i: IntersectionId) -> usize {
    let k = state.network().intersection(i).num_phases();
    let mut best = 0;
    let mut best_p = pressure(state, i, 0);
    for phase in 1..k {
        let p = pressure(state, i, phase);
        if p > best_p {
            best = phase;
            best_p = p;
        }
    }
    best
}

/// Anything that can pick a phase for every intersection at a decision epoch.
pub trait SignalController {
    fn decide(&mut self, state: &SimState) -> Vec<usize>;
}

/// Baseline controller over a whole network.
#[derive(Clone, Debug)]
pub struct BaselineController {
    config: ControllerConfig,
    offsets: Vec<u64>,
}

impl BaselineController {
    pub fn new(config: ControllerConfig, net: &RoadNetwork) -> Result<Self> {
        config.validate()?;
        Ok(BaselineController {
            config,
            offsets: vec![0; net.num_intersections()],
        })
    }

    /// Per-intersection FixedTime offsets (seconds).
    pub fn with_offsets(mut self, offsets: Vec<u64>) -> Self {
        self.offsets = offsets;
        self
    }
}

impl SignalController for BaselineController {
    fn decide(&mut self, state: &SimState) -> Vec<usize> {
        let net = state.network();
        (0..net.num_intersections())
            .map(|idx| {
                let i = IntersectionId(idx);
                match self.config.kind {
                    BaselineKind::FixedTime => fixed_time_decide(
                        net.intersection(i).num_phases(),
                        state.clock(),
                        self.config.fixed_phase_duration,
                        self.offsets[idx],
                    ),
                    BaselineKind::Sotl => sotl_decide(state, i, self.config.sotl_threshold),
                    BaselineKind::MaxPressure => max_pressure_decide(state, i),
                }
            })
            .collect()
    }
}

/// Cyclic fixed plan with per-phase durations, shared by all intersections.
#[derive(Clone, Debug)]
pub struct FixedPlanController {
    pub plan: Vec<u64>,
}

impl SignalController for FixedPlanController {
    fn decide(&mut self, state: &SimState) -> Vec<usize> {
        let k = fixed_plan_decide(&self.plan, state.clock(), 0).unwrap_or(0);
        vec![k; state.network().num_intersections()]
    }
}
