use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::network::{IntersectionId, LaneId, RoadNetwork};
use crate::scenario::{Arrival, ArrivalSampler, FlowSchedule};
use crate::{Error, Result};

/// Consecutive green ticks a queue head needs before it may leave.
pub const SATURATION_HEADWAY: u32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VehicleId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VehicleStatus {
    /// Spawned but waiting in the source buffer of its entry lane.
    Pending,
    InTransit,
    Queued,
    Completed,
}

#[derive(Clone, Debug)]
pub struct Vehicle {
    pub id: VehicleId,
    pub route: usize,
    /// Index into the route of the lane currently occupied.
    pub route_pos: usize,
    /// Scheduled arrival time; source-buffer waiting counts as travel time.
    pub enter_time: u64,
    pub exit_time: Option<u64>,
    pub status: VehicleStatus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripRecord {
    pub vehicle: VehicleId,
    pub route: usize,
    pub enter_time: u64,
    pub exit_time: u64,
}

impl TripRecord {
    pub fn duration(&self) -> u64 {
        self.exit_time - self.enter_time
    }
}

#[derive(Clone, Debug, Default)]
struct LaneState {
    queue: VecDeque<VehicleId>,
    /// (vehicle, time at which it reaches the stop line), FIFO.
    transit: VecDeque<(VehicleId, u64)>,
    /// Consecutive green ticks served to the current head.
    service: u32,
    /// Spawned vehicles that could not enter yet (entry lanes only).
    source: VecDeque<VehicleId>,
}

impl LaneState {
    fn occupancy(&self) -> usize {
        self.queue.len() + self.transit.len()
    }
}

/// Per-tick summary returned by [`SimState::step`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TickReport {
    pub spawned: usize,
    pub entered: usize,
    pub completed: usize,
}

/// Global indicators the multi-task module consumes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GlobalStats {
    /// Vehicles that entered the network during the last tick.
    pub incoming_count: f64,
    /// Mean duration of completed trips in the trailing window.
    pub avg_travel_time: f64,
    /// Vehicles standing in a queue anywhere in the network.
    pub queue_total: f64,
    /// Vehicles inside the network.
    pub on_road: f64,
}

/// Raw per-intersection observation: per-incoming-lane vehicle counts
/// followed by the one-hot current phase.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub lane_counts: Vec<f64>,
    pub phase: Vec<f64>,
}

impl Observation {
    pub fn len(&self) -> usize {
        self.lane_counts.len() + self.phase.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        v.extend_from_slice(&self.lane_counts);
        v.extend_from_slice(&self.phase);
        v
    }
}

#[derive(Clone, Debug)]
pub struct SimState {
    net: Arc<RoadNetwork>,
    routes: Arc<[Vec<LaneId>]>,
    clock: u64,
    phases: Vec<usize>,
    lanes: Vec<LaneState>,
    vehicles: Vec<Vehicle>,
    completed: Vec<TripRecord>,
    pending: usize,
    active: usize,
    entered_last_tick: usize,
    cumulative_entered: usize,
    trip_time_sum: u64,
}

impl SimState {
    /// Fresh state at clock 0 with every intersection on phase 0.
    pub fn new(net: Arc<RoadNetwork>, routes: Arc<[Vec<LaneId>]>) -> Result<Self> {
        for r in routes.iter() {
            net.validate_route(r)?;
        }
        Ok(SimState {
            phases: vec![0; net.num_intersections()],
            lanes: vec![LaneState::default(); net.lanes.len()],
            net,
            routes,
            clock: 0,
            vehicles: Vec::new(),
            completed: Vec::new(),
            pending: 0,
            active: 0,
            entered_last_tick: 0,
            cumulative_entered: 0,
            trip_time_sum: 0,
        })
    }

    pub fn network(&self) -> &Arc<RoadNetwork> {
        &self.net
    }

    pub fn routes(&self) -> &Arc<[Vec<LaneId>]> {
        &self.routes
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn current_phase(&self, i: IntersectionId) -> usize {
        self.phases[i.0]
    }

    pub fn vehicles(&self) -> &[Vehicle] {
        &self.vehicles
    }

    pub fn completed(&self) -> &[TripRecord] {
        &self.completed
    }

    pub fn spawned(&self) -> usize {
        self.vehicles.len()
    }

    pub fn pending(&self) -> usize {
        self.pending
    }

    pub fn active(&self) -> usize {
        self.active
    }

    pub fn cumulative_entered(&self) -> usize {
        self.cumulative_entered
    }

    /// Advances the clock by one tick.
    ///
    /// Order within a tick: apply phases, spawn `arrivals` into their source
    /// buffers, admit buffered vehicles onto entry lanes with free capacity,
    /// discharge queue heads, then move vehicles that reach the stop line into
    /// the queue.
    pub fn step(&mut self, actions: &[usize], arrivals: &[Arrival]) -> Result<TickReport> {
        let net = Arc::clone(&self.net);
        if actions.len() != net.num_intersections() {
            return Err(Error::Contract(format!(
                "expected {} actions, got {}",
                net.num_intersections(),
                actions.len()
            )));
        }
        for (i, &a) in actions.iter().enumerate() {
            let k = net.intersections[i].num_phases();
            if a >= k {
                return Err(Error::Contract(format!(
                    "action {a} out of range for intersection '{}' with {k} phases",
                    net.intersections[i].name
                )));
            }
        }
        self.phases.copy_from_slice(actions);

        let now = self.clock;
        let mut report = TickReport::default();

        for arrival in arrivals {
            let route = self.routes.get(arrival.route).ok_or_else(|| {
                Error::Contract(format!("arrival references unknown route {}", arrival.route))
            })?;
            if route[0] != arrival.entry_lane {
                return Err(Error::Contract(format!(
                    "arrival entry lane '{}' is not the first lane of route {}",
                    net.lane(arrival.entry_lane).name,
                    arrival.route
                )));
            }
            let id = VehicleId(self.vehicles.len());
            self.vehicles.push(Vehicle {
                id,
                route: arrival.route,
                route_pos: 0,
                enter_time: now,
                exit_time: None,
                status: VehicleStatus::Pending,
            });
            self.lanes[arrival.entry_lane.0].source.push_back(id);
            self.pending += 1;
            report.spawned += 1;
        }

        for (li, lane) in net.lanes.iter().enumerate() {
            let ls = &mut self.lanes[li];
            while !ls.source.is_empty() && ls.occupancy() < lane.capacity {
                let v = ls.source.pop_front().expect("non-empty source");
                ls.transit.push_back((v, now + lane.free_flow_ticks));
                self.vehicles[v.0].status = VehicleStatus::InTransit;
                self.pending -= 1;
                self.active += 1;
                report.entered += 1;
            }
        }

        for (li, lane) in net.lanes.iter().enumerate() {
            let green = match lane.to {
                None => true,
                Some(node) => {
                    let slot = net.incoming_slot(lane.id).expect("incoming lane has slot");
                    net.intersections[node.0].is_green(self.phases[node.0], slot)
                        || lane.movement == super::Movement::Right
                }
            };
            let Some(&head) = self.lanes[li].queue.front() else {
                self.lanes[li].service = 0;
                continue;
            };
            if !green {
                self.lanes[li].service = 0;
                continue;
            }
            let ls = &mut self.lanes[li];
            ls.service = (ls.service + 1).min(SATURATION_HEADWAY);
            if ls.service < SATURATION_HEADWAY {
                continue;
            }
            let veh = &self.vehicles[head.0];
            let route = &self.routes[veh.route];
            match route.get(veh.route_pos + 1).copied() {
                None => {
                    self.lanes[li].queue.pop_front();
                    self.lanes[li].service = 0;
                    let veh = &mut self.vehicles[head.0];
                    veh.exit_time = Some(now + 1);
                    veh.status = VehicleStatus::Completed;
                    let rec = TripRecord {
                        vehicle: head,
                        route: veh.route,
                        enter_time: veh.enter_time,
                        exit_time: now + 1,
                    };
                    self.trip_time_sum += rec.duration();
                    self.completed.push(rec);
                    self.active -= 1;
                    report.completed += 1;
                }
                Some(next) => {
                    let next_lane = net.lane(next);
                    if self.lanes[next.0].occupancy() >= next_lane.capacity {
                        // blocked; the head keeps its accumulated service
                        continue;
                    }
                    self.lanes[li].queue.pop_front();
                    self.lanes[li].service = 0;
                    self.lanes[next.0]
                        .transit
                        .push_back((head, now + 1 + next_lane.free_flow_ticks));
                    let veh = &mut self.vehicles[head.0];
                    veh.route_pos += 1;
                    veh.status = VehicleStatus::InTransit;
                }
            }
        }

        for ls in self.lanes.iter_mut() {
            while let Some(&(v, arrive)) = ls.transit.front() {
                if arrive > now + 1 {
                    break;
                }
                ls.transit.pop_front();
                ls.queue.push_back(v);
                self.vehicles[v.0].status = VehicleStatus::Queued;
            }
        }

        self.clock += 1;
        self.entered_last_tick = report.entered;
        self.cumulative_entered += report.entered;
        Ok(report)
    }

    /// Number of stopped (queued) vehicles on `lane`.
    pub fn queue_length(&self, lane: LaneId) -> Result<usize> {
        self.lanes
            .get(lane.0)
            .map(|l| l.queue.len())
            .ok_or_else(|| Error::Contract(format!("unknown lane {}", lane.0)))
    }

    /// Vehicles on `lane`, queued or moving.
    pub fn lane_count(&self, lane: LaneId) -> usize {
        self.lanes[lane.0].occupancy()
    }

    pub fn lane_density(&self, lane: LaneId) -> f64 {
        self.lane_count(lane) as f64 / self.net.lane(lane).capacity as f64
    }

    /// Vehicles waiting in the source buffer of an entry lane.
    pub fn source_len(&self, lane: LaneId) -> usize {
        self.lanes[lane.0].source.len()
    }

    fn check_intersection(&self, i: IntersectionId) -> Result<()> {
        if i.0 >= self.net.num_intersections() {
            return Err(Error::Contract(format!("unknown intersection {}", i.0)));
        }
        Ok(())
    }

    /// Negative total queue over the intersection's incoming lanes.
    pub fn reward(&self, i: IntersectionId) -> Result<f64> {
        self.check_intersection(i)?;
        let q: usize = self.net.intersections[i.0]
            .incoming
            .iter()
            .map(|l| self.lanes[l.0].queue.len())
            .sum();
        Ok(-(q as f64))
    }

    pub fn raw_observation(&self, i: IntersectionId) -> Result<Observation> {
        self.check_intersection(i)?;
        let is = &self.net.intersections[i.0];
        let lane_counts = is.incoming.iter().map(|l| self.lane_count(*l) as f64).collect();
        let mut phase = vec![0.0; is.num_phases()];
        phase[self.phases[i.0]] = 1.0;
        Ok(Observation { lane_counts, phase })
    }

    pub fn queue_total(&self) -> usize {
        self.lanes.iter().map(|l| l.queue.len()).sum()
    }

    /// Mean completed-trip duration; `window` restricts to trips that
    /// finished within the last `window` seconds (None = since the start).
    pub fn mean_trip_time(&self, window: Option<u64>) -> f64 {
        match window {
            None => {
                if self.completed.is_empty() {
                    0.0
                } else {
                    self.trip_time_sum as f64 / self.completed.len() as f64
                }
            }
            Some(w) => {
                let cutoff = self.clock.saturating_sub(w);
                let (sum, n) = self
                    .completed
                    .iter()
                    .rev()
                    .take_while(|t| t.exit_time > cutoff)
                    .fold((0u64, 0usize), |(s, n), t| (s + t.duration(), n + 1));
                if n == 0 {
                    0.0
                } else {
                    sum as f64 / n as f64
                }
            }
        }
    }

    pub fn global_stats(&self, window: Option<u64>) -> GlobalStats {
        GlobalStats {
            incoming_count: self.entered_last_tick as f64,
            avg_travel_time: self.mean_trip_time(window),
            queue_total: self.queue_total() as f64,
            on_road: self.active as f64,
        }
    }

    /// Average travel time with unfinished trips right-censored at `horizon`.
    pub fn average_travel_time(&self, horizon: u64) -> Result<f64> {
        if self.vehicles.is_empty() {
            return Err(Error::EmptyScenario);
        }
        let total: u64 = self
            .vehicles
            .iter()
            .map(|v| match v.exit_time {
                Some(exit) => exit - v.enter_time,
                None => horizon.saturating_sub(v.enter_time),
            })
            .sum();
        Ok(total as f64 / self.vehicles.len() as f64)
    }

    /// spawned = pending + active + completed, and no lane over capacity.
    pub fn check_invariants(&self) -> Result<()> {
        if self.spawned() != self.pending + self.active + self.completed.len() {
            return Err(Error::Contract(format!(
                "conservation broken at t={}: spawned {} != pending {} + active {} + completed {}",
                self.clock,
                self.spawned(),
                self.pending,
                self.active,
                self.completed.len()
            )));
        }
        let in_lanes: usize = self.lanes.iter().map(|l| l.occupancy()).sum();
        let buffered: usize = self.lanes.iter().map(|l| l.source.len()).sum();
        if in_lanes != self.active || buffered != self.pending {
            return Err(Error::Contract(format!(
                "bookkeeping mismatch at t={}: lanes hold {in_lanes} (active {}), buffers hold {buffered} (pending {})",
                self.clock, self.active, self.pending
            )));
        }
        for (l, ls) in self.net.lanes.iter().zip(&self.lanes) {
            if ls.occupancy() > l.capacity {
                return Err(Error::Contract(format!(
                    "lane '{}' over capacity at t={}: {} > {}",
                    l.name,
                    self.clock,
                    ls.occupancy(),
                    l.capacity
                )));
            }
        }
        Ok(())
    }
}

/// A simulator instance bound to a flow schedule.
#[derive(Clone, Debug)]
pub struct Simulation {
    state: SimState,
    sampler: ArrivalSampler,
    horizon: u64,
}

impl Simulation {
    pub fn new(
        net: Arc<RoadNetwork>,
        routes: Arc<[Vec<LaneId>]>,
        flow: &FlowSchedule,
        seed: u64,
    ) -> Result<Self> {
        let state = SimState::new(net, Arc::clone(&routes))?;
        let sampler = ArrivalSampler::new(flow, &routes, seed)?;
        Ok(Simulation {
            state,
            sampler,
            horizon: flow.horizon,
        })
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn done(&self) -> bool {
        self.state.clock >= self.horizon
    }

    pub fn step(&mut self, actions: &[usize]) -> Result<TickReport> {
        let arrivals = self.sampler.sample(self.state.clock);
        self.state.step(actions, &arrivals)
    }

    /// Holds `actions` for `ticks` ticks (or until the horizon).
    pub fn step_interval(&mut self, actions: &[usize], ticks: u64) -> Result<TickReport> {
        let mut total = TickReport::default();
        for _ in 0..ticks {
            if self.done() {
                break;
            }
            let r = self.step(actions)?;
            total.spawned += r.spawned;
            total.entered += r.entered;
            total.completed += r.completed;
        }
        Ok(total)
    }

    pub fn average_travel_time(&self) -> Result<f64> {
        self.state.average_travel_time(self.horizon)
    }
}
