use super::runner::run_controller_episode;
use super::{FlowKind, Scenario, ScenarioConfig};
use crate::baselines::FixedPlanController;
use crate::scenario::RouteWeighting;
use crate::Result;

/// Candidate green times (seconds) per phase for the exhaustive search.
pub const FIXED_PLAN_DURATIONS: [u64; 8] = [0, 5, 10, 15, 20, 30, 40, 60];

/// Single intersection with `ns_share` of a constant `rate` entering on the
/// north/south approaches.
pub fn single_intersection_scenario(rate: f64, ns_share: f64, horizon: u64) -> ScenarioConfig {
    ScenarioConfig::Grid {
        rows: 1,
        cols: 1,
        flow: FlowKind::Constant { rate },
        weighting: RouteWeighting::Axis { ns_share },
        lane_length: 300.0,
        lane_capacity: 40,
        horizon,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FixedPlanSearch {
    pub best_plan: Vec<u64>,
    pub best_att: f64,
    pub evaluated: usize,
}

/// Tries every per-phase duration combination from `durations` (skipping
/// the all-zero plan) and returns the lowest average travel time.
pub fn exhaustive_fixed_search(scn: &Scenario, seed: u64, durations: &[u64], interval: u64) -> Result<FixedPlanSearch> {
    let k = scn.net.intersections.iter().map(|i| i.num_phases()).max().unwrap_or(0);
    let mut best: Option<(Vec<u64>, f64)> = None;
    let mut evaluated = 0;
    let total = durations.len().pow(k as u32);
    for code in 0..total {
        let mut c = code;
        let plan: Vec<u64> = (0..k)
            .map(|_| {
                let d = durations[c % durations.len()];
                c /= durations.len();
                d
            })
            .collect();
        if plan.iter().all(|&d| d == 0) {
            continue;
        }
        let mut ctl = FixedPlanController { plan: plan.clone() };
        let att = run_controller_episode(scn, seed, &mut ctl, interval)?.average_travel_time;
        evaluated += 1;
        if best.as_ref().is_none_or(|(_, b)| att < *b) {
            best = Some((plan, att));
        }
    }
    let (best_plan, best_att) = best.expect("at least one non-zero plan");
    Ok(FixedPlanSearch {
        best_plan,
        best_att,
        evaluated,
    })
}
