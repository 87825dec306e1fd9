use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand_distr::Poisson;
use serde::{Deserialize, Serialize};

use super::spec::FORMAT_VERSION;
use super::{read_json, write_json};
use crate::rng::{stream, stream_rng, Rng};
use crate::sim::{LaneId, RoadNetwork};
use crate::{Error, Result};

/// Window length of the synthetic peak-hour program, seconds.
pub const SYNTHETIC_PEAK_WINDOW: u64 = 600;
/// Arrival rates (vehicles/s) of the six synthetic peak-hour windows.
pub const SYNTHETIC_PEAK_RATES: [f64; 6] = [1.00, 0.25, 4.00, 2.00, 0.2, 0.5];

const RATE_UNIT: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowWindow {
    pub start: u64,
    pub end: u64,
    /// Vehicles per second.
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RouteSpec {
    pub lanes: Vec<String>,
    pub weight: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    /// One vehicle every 1/rate seconds via a fractional accumulator.
    #[default]
    Quota,
    Poisson,
}

/// Flow file contents: a piecewise-constant arrival program plus routes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowSchedule {
    pub format_version: u32,
    pub horizon: u64,
    pub windows: Vec<FlowWindow>,
    pub routes: Vec<RouteSpec>,
    pub seed: u64,
    #[serde(default)]
    pub sampling: Sampling,
}

impl FlowSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::FormatVersion {
                found: self.format_version,
                expected: FORMAT_VERSION,
            });
        }
        let mut cursor = 0;
        for (i, w) in self.windows.iter().enumerate() {
            if w.start != cursor {
                return Err(Error::InvalidFlow(format!(
                    "window {i} starts at {} but the previous window ends at {cursor} (windows must be contiguous and non-overlapping)",
                    w.start
                )));
            }
            if w.end <= w.start {
                return Err(Error::InvalidFlow(format!("window {i} is empty or reversed")));
            }
            if !(w.rate.is_finite() && w.rate >= 0.0) {
                return Err(Error::InvalidFlow(format!("window {i} has invalid rate {}", w.rate)));
            }
            cursor = w.end;
        }
        if cursor != self.horizon {
            return Err(Error::InvalidFlow(format!(
                "windows cover [0, {cursor}) but the horizon is {}",
                self.horizon
            )));
        }
        if self.routes.iter().any(|r| !(r.weight.is_finite() && r.weight >= 0.0)) {
            return Err(Error::InvalidFlow("route weights must be finite and non-negative".into()));
        }
        if !self.routes.is_empty() {
            let total: f64 = self.routes.iter().map(|r| r.weight).sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidFlow(format!("route weights sum to {total}, not 1")));
            }
        } else if self.windows.iter().any(|w| w.rate > 0.0) {
            return Err(Error::InvalidFlow("positive arrival rate but no routes".into()));
        }
        Ok(())
    }

    pub fn rate_at(&self, t: u64) -> f64 {
        self.window_at(t).map_or(0.0, |i| self.windows[i].rate)
    }

    fn window_at(&self, t: u64) -> Option<usize> {
        let i = self.windows.partition_point(|w| w.end <= t);
        (i < self.windows.len() && self.windows[i].start <= t).then_some(i)
    }

    /// Expected arrivals per window (rate x duration).
    pub fn expected_totals(&self) -> Vec<f64> {
        self.windows.iter().map(|w| w.rate * (w.end - w.start) as f64).collect()
    }

    /// Resolves lane names of every route against `net`.
    pub fn resolve_routes(&self, net: &RoadNetwork) -> Result<Vec<Vec<LaneId>>> {
        self.routes
            .iter()
            .map(|r| {
                let lanes = r
                    .lanes
                    .iter()
                    .map(|n| {
                        net.lane_by_name(n)
                            .ok_or_else(|| Error::InvalidFlow(format!("route references unknown lane '{n}'")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                net.validate_route(&lanes)?;
                Ok(lanes)
            })
            .collect()
    }
}

/// The six-window flat-peak-flat program (4770 expected vehicles per hour).
pub fn gen_synthetic_peak(horizon: u64, routes: Vec<RouteSpec>, seed: u64) -> Result<FlowSchedule> {
    let span = SYNTHETIC_PEAK_WINDOW * SYNTHETIC_PEAK_RATES.len() as u64;
    if horizon != span {
        return Err(Error::Config(format!("synthetic peak flow is defined for a {span} s horizon, got {horizon}")));
    }
    let windows = SYNTHETIC_PEAK_RATES
        .iter()
        .enumerate()
        .map(|(i, &rate)| FlowWindow {
            start: i as u64 * SYNTHETIC_PEAK_WINDOW,
            end: (i as u64 + 1) * SYNTHETIC_PEAK_WINDOW,
            rate,
        })
        .collect();
    let flow = FlowSchedule {
        format_version: FORMAT_VERSION,
        horizon,
        windows,
        routes,
        seed,
        sampling: Sampling::Quota,
    };
    flow.validate()?;
    Ok(flow)
}

pub fn constant_flow(rate: f64, horizon: u64, routes: Vec<RouteSpec>, seed: u64) -> Result<FlowSchedule> {
    let flow = FlowSchedule {
        format_version: FORMAT_VERSION,
        horizon,
        windows: vec![FlowWindow { start: 0, end: horizon, rate }],
        routes,
        seed,
        sampling: Sampling::Quota,
    };
    flow.validate()?;
    Ok(flow)
}

pub fn load_flow(path: impl AsRef<Path>) -> Result<FlowSchedule> {
    let flow: FlowSchedule = read_json(path.as_ref())?;
    flow.validate()?;
    Ok(flow)
}

pub fn save_flow(flow: &FlowSchedule, path: impl AsRef<Path>) -> Result<()> {
    write_json(path.as_ref(), flow)
}

/// A vehicle to spawn this tick.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Arrival {
    pub route: usize,
    pub entry_lane: LaneId,
}

/// Draws arrivals tick by tick from a [`FlowSchedule`].
#[derive(Clone, Debug)]
pub struct ArrivalSampler {
    windows: Vec<FlowWindow>,
    horizon: u64,
    mode: Sampling,
    entry_lanes: Vec<LaneId>,
    route_dist: Option<WeightedIndex<f64>>,
    /// Fractional vehicles owed, in millionths.
    accumulator: u64,
    rng: Rng,
}

impl ArrivalSampler {
    /// `routes` must be `flow.routes` resolved against the network.
    pub fn new(flow: &FlowSchedule, routes: &[Vec<LaneId>], seed: u64) -> Result<Self> {
        flow.validate()?;
        if routes.len() != flow.routes.len() {
            return Err(Error::Contract("resolved routes do not match the flow's route table".into()));
        }
        let route_dist = if flow.routes.is_empty() {
            None
        } else {
            Some(
                WeightedIndex::new(flow.routes.iter().map(|r| r.weight))
                    .map_err(|e| Error::InvalidFlow(format!("route weights: {e}")))?,
            )
        };
        let mixed = flow.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ seed;
        Ok(ArrivalSampler {
            windows: flow.windows.clone(),
            horizon: flow.horizon,
            mode: flow.sampling,
            entry_lanes: routes.iter().map(|r| r[0]).collect(),
            route_dist,
            accumulator: 0,
            rng: stream_rng(mixed, stream::ARRIVALS),
        })
    }

    /// Arrivals for `tick`. Ticks must be requested in increasing order for
    /// quota sampling to hit its totals exactly.
    pub fn sample(&mut self, tick: u64) -> Vec<Arrival> {
        if tick >= self.horizon {
            return Vec::new();
        }
        let i = self.windows.partition_point(|w| w.end <= tick);
        let rate = self.windows[i].rate;
        let count = match self.mode {
            Sampling::Quota => {
                self.accumulator += (rate * RATE_UNIT as f64).round() as u64;
                let n = self.accumulator / RATE_UNIT;
                self.accumulator %= RATE_UNIT;
                n as usize
            }
            Sampling::Poisson => {
                if rate > 0.0 {
                    Poisson::new(rate).expect("positive rate").sample(&mut self.rng) as usize
                } else {
                    0
                }
            }
        };
        let Some(dist) = &self.route_dist else {
            return Vec::new();
        };
        (0..count)
            .map(|_| {
                let route = dist.sample(&mut self.rng);
                Arrival {
                    route,
                    entry_lane: self.entry_lanes[route],
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{gen_grid, grid_route_specs, LaneParams, RouteWeighting};

    fn grid_flow(rows: usize, cols: usize) -> (RoadNetwork, FlowSchedule) {
        let net = RoadNetwork::build(&gen_grid(rows, cols, &LaneParams::default()).unwrap()).unwrap();
        let routes = grid_route_specs(&net, RouteWeighting::Uniform).unwrap();
        let flow = gen_synthetic_peak(3600, routes, 11).unwrap();
        (net, flow)
    }

    #[test]
    fn synthetic_peak_rates() {
        let (_, flow) = grid_flow(1, 1);
        assert_eq!(flow.rate_at(0), 1.00);
        assert_eq!(flow.rate_at(1200), 4.00);
        assert_eq!(flow.rate_at(1799), 4.00);
        assert_eq!(flow.rate_at(3599), 0.5);
        assert_eq!(flow.rate_at(3600), 0.0);
        let totals = flow.expected_totals();
        let cumulative: f64 = totals.iter().sum();
        assert!((cumulative - 4770.0).abs() < 1e-9);
    }

    #[test]
    fn synthetic_peak_requires_one_hour() {
        assert!(gen_synthetic_peak(1800, Vec::new(), 0).is_err());
    }

    #[test]
    fn quota_sampling_hits_window_totals() {
        let (net, flow) = grid_flow(1, 1);
        let routes = flow.resolve_routes(&net).unwrap();
        let mut s = ArrivalSampler::new(&flow, &routes, 3).unwrap();
        let mut per_window = [0usize; 6];
        for t in 0..3600 {
            per_window[(t / 600) as usize] += s.sample(t).len();
        }
        // 0.5 veh/s over the last 600 s is 300 vehicles; the cumulative
        // count is 4770.
        assert_eq!(per_window, [600, 150, 2400, 1200, 120, 300]);
        assert_eq!(per_window.iter().sum::<usize>(), 4770);
    }

    #[test]
    fn zero_rate_gives_no_arrivals() {
        let (net, base) = grid_flow(1, 1);
        let flow = constant_flow(0.0, 600, base.routes.clone(), 1).unwrap();
        let routes = flow.resolve_routes(&net).unwrap();
        let mut s = ArrivalSampler::new(&flow, &routes, 3).unwrap();
        assert!((0..600).all(|t| s.sample(t).is_empty()));
    }

    #[test]
    fn sampling_is_deterministic_under_seed() {
        let (net, flow) = grid_flow(2, 2);
        let routes = flow.resolve_routes(&net).unwrap();
        let draw = |seed| {
            let mut s = ArrivalSampler::new(&flow, &routes, seed).unwrap();
            (0..600).flat_map(|t| s.sample(t)).collect::<Vec<_>>()
        };
        assert_eq!(draw(5), draw(5));
        assert_ne!(draw(5), draw(6));
    }

    #[test]
    fn poisson_mean_is_close_to_rate() {
        let (net, base) = grid_flow(1, 1);
        let mut flow = constant_flow(2.0, 3600, base.routes.clone(), 1).unwrap();
        flow.sampling = Sampling::Poisson;
        let routes = flow.resolve_routes(&net).unwrap();
        let mut s = ArrivalSampler::new(&flow, &routes, 9).unwrap();
        let n: usize = (0..3600).map(|t| s.sample(t).len()).sum();
        // 7200 expected, sd ~ 85
        assert!((n as f64 - 7200.0).abs() < 500.0, "{n}");
    }

    #[test]
    fn overlapping_windows_are_rejected() {
        let (_, mut flow) = grid_flow(1, 1);
        flow.windows[1].start = 500;
        assert!(matches!(flow.validate(), Err(Error::InvalidFlow(_))));
    }

    #[test]
    fn gap_and_short_coverage_are_rejected() {
        let (_, mut flow) = grid_flow(1, 1);
        flow.windows.pop();
        assert!(flow.validate().is_err());
        let (_, mut flow) = grid_flow(1, 1);
        flow.windows[2].start = 1300;
        assert!(flow.validate().is_err());
    }

    #[test]
    fn weights_must_sum_to_one() {
        let (_, mut flow) = grid_flow(1, 1);
        flow.routes[0].weight += 0.5;
        assert!(flow.validate().is_err());
    }
}
