use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::scenario::NetworkSpec;
use crate::{Error, Result};

/// Free-flow speed in m/s (40 km/h).
pub const FREE_FLOW_SPEED: f64 = 100.0 / 9.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LaneId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IntersectionId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Movement {
    Left,
    Straight,
    Right,
}

impl Movement {
    pub const ALL: [Movement; 3] = [Movement::Left, Movement::Straight, Movement::Right];

    pub fn index(self) -> usize {
        match self {
            Movement::Left => 0,
            Movement::Straight => 1,
            Movement::Right => 2,
        }
    }
}

/// Seconds needed to traverse `length` meters at free flow, rounded up.
pub fn free_flow_ticks(length: f64) -> u64 {
    let exact = length / FREE_FLOW_SPEED;
    // 300 m at 100/9 m/s is 27 s exactly but evaluates to 27.000000000000004.
    let ticks = (exact - 1e-9).ceil();
    (ticks.max(1.0)) as u64
}

#[derive(Clone, Debug)]
pub struct Lane {
    pub id: LaneId,
    pub name: String,
    pub road: String,
    /// Position of this lane within its road (0 = innermost).
    pub position: usize,
    pub length: f64,
    pub capacity: usize,
    pub movement: Movement,
    pub from: Option<IntersectionId>,
    pub to: Option<IntersectionId>,
    pub free_flow_ticks: u64,
}

impl Lane {
    pub fn is_entry(&self) -> bool {
        self.from.is_none()
    }

    pub fn is_exit(&self) -> bool {
        self.to.is_none()
    }
}

#[derive(Clone, Debug)]
pub struct Phase {
    pub name: String,
    /// (incoming lane, outgoing lane) pairs granted green.
    pub movements: Vec<(LaneId, LaneId)>,
}

#[derive(Clone, Debug)]
pub struct Intersection {
    pub id: IntersectionId,
    pub name: String,
    pub incoming: Vec<LaneId>,
    pub outgoing: Vec<LaneId>,
    pub phases: Vec<Phase>,
    /// `green[k][j]` is true when incoming lane `j` may discharge under phase `k`.
    green: Vec<Vec<bool>>,
}

impl Intersection {
    pub fn num_phases(&self) -> usize {
        self.phases.len()
    }

    /// Whether the `slot`-th incoming lane is green under `phase`.
    pub fn is_green(&self, phase: usize, slot: usize) -> bool {
        self.green[phase][slot]
    }

    /// Incoming lanes served by `phase`, in incoming order, without duplicates.
    pub fn phase_lanes(&self, phase: usize) -> impl Iterator<Item = LaneId> + '_ {
        self.incoming
            .iter()
            .enumerate()
            .filter(move |(slot, _)| self.green[phase][*slot])
            .map(|(_, &l)| l)
    }
}

#[derive(Clone, Debug)]
pub struct RoadNetwork {
    pub intersections: Vec<Intersection>,
    pub lanes: Vec<Lane>,
    /// Permitted downstream lanes for every lane.
    pub adjacency: Vec<Vec<LaneId>>,
    /// For each lane ending at an intersection, its slot in that intersection's
    /// incoming list.
    incoming_slot: Vec<Option<usize>>,
    lane_index: HashMap<String, LaneId>,
    intersection_index: HashMap<String, IntersectionId>,
}

impl RoadNetwork {
    /// Builds and validates a network from its description.
    pub fn build(spec: &NetworkSpec) -> Result<Self> {
        let mut intersection_index = HashMap::new();
        for (i, is) in spec.intersections.iter().enumerate() {
            if intersection_index
                .insert(is.id.clone(), IntersectionId(i))
                .is_some()
            {
                return Err(Error::Structural(format!("duplicate intersection '{}'", is.id)));
            }
        }
        let mut lane_index = HashMap::new();
        for (i, l) in spec.lanes.iter().enumerate() {
            if lane_index.insert(l.id.clone(), LaneId(i)).is_some() {
                return Err(Error::Structural(format!("duplicate lane '{}'", l.id)));
            }
        }
        let node = |lane: &str, name: &Option<String>| -> Result<Option<IntersectionId>> {
            match name {
                None => Ok(None),
                Some(n) => intersection_index.get(n).copied().map(Some).ok_or_else(|| {
                    Error::Structural(format!("lane '{lane}' references unknown intersection '{n}'"))
                }),
            }
        };

        let mut road_positions: HashMap<&str, usize> = HashMap::new();
        let mut lanes = Vec::with_capacity(spec.lanes.len());
        for (i, l) in spec.lanes.iter().enumerate() {
            let from = node(&l.id, &l.from)?;
            let to = node(&l.id, &l.to)?;
            if from.is_some() && from == to {
                return Err(Error::Structural(format!(
                    "lane '{}' is both incoming and outgoing at the same intersection",
                    l.id
                )));
            }
            if !(l.length.is_finite() && l.length > 0.0) {
                return Err(Error::Structural(format!("lane '{}' has non-positive length", l.id)));
            }
            if l.capacity == 0 {
                return Err(Error::Structural(format!("lane '{}' has zero capacity", l.id)));
            }
            let pos = road_positions.entry(l.road.as_str()).or_insert(0);
            lanes.push(Lane {
                id: LaneId(i),
                name: l.id.clone(),
                road: l.road.clone(),
                position: *pos,
                length: l.length,
                capacity: l.capacity,
                movement: l.movement,
                from,
                to,
                free_flow_ticks: free_flow_ticks(l.length),
            });
            *pos += 1;
        }

        let lookup = |owner: &str, name: &str| -> Result<LaneId> {
            lane_index.get(name).copied().ok_or_else(|| {
                Error::Structural(format!("'{owner}' references unknown lane '{name}'"))
            })
        };

        let mut adjacency = vec![Vec::new(); lanes.len()];
        for (i, l) in spec.lanes.iter().enumerate() {
            for next in &l.connects_to {
                let n = lookup(&l.id, next)?;
                let (up, down) = (&lanes[i], &lanes[n.0]);
                if up.to.is_none() || up.to != down.from {
                    return Err(Error::Structural(format!(
                        "lane '{}' cannot connect to lane '{}': they do not meet at an intersection",
                        l.id, next
                    )));
                }
                adjacency[i].push(n);
            }
        }

        let mut intersections = Vec::with_capacity(spec.intersections.len());
        let mut incoming_slot = vec![None; lanes.len()];
        for (i, is) in spec.intersections.iter().enumerate() {
            let id = IntersectionId(i);
            let incoming: Vec<LaneId> =
                lanes.iter().filter(|l| l.to == Some(id)).map(|l| l.id).collect();
            let outgoing: Vec<LaneId> =
                lanes.iter().filter(|l| l.from == Some(id)).map(|l| l.id).collect();
            if incoming.is_empty() {
                return Err(Error::Structural(format!("intersection '{}' has no incoming lanes", is.id)));
            }
            for &l in &incoming {
                if adjacency[l.0].is_empty() {
                    return Err(Error::Structural(format!(
                        "incoming lane '{}' of intersection '{}' has no outgoing connection",
                        lanes[l.0].name, is.id
                    )));
                }
            }
            if is.phases.len() < 2 {
                return Err(Error::Structural(format!(
                    "intersection '{}' needs at least 2 phases, found {}",
                    is.id,
                    is.phases.len()
                )));
            }
            for (slot, &l) in incoming.iter().enumerate() {
                incoming_slot[l.0] = Some(slot);
            }
            let mut phases = Vec::with_capacity(is.phases.len());
            let mut green = Vec::with_capacity(is.phases.len());
            for ph in &is.phases {
                if ph.movements.is_empty() {
                    return Err(Error::Structural(format!(
                        "phase '{}' of intersection '{}' has no movements",
                        ph.name, is.id
                    )));
                }
                let mut mask = vec![false; incoming.len()];
                let mut movements = Vec::with_capacity(ph.movements.len());
                for [a, b] in &ph.movements {
                    let a_id = lookup(&ph.name, a)?;
                    let b_id = lookup(&ph.name, b)?;
                    let la = &lanes[a_id.0];
                    if la.to != Some(id) || lanes[b_id.0].from != Some(id) {
                        return Err(Error::Structural(format!(
                            "phase '{}' movement ({a}, {b}) does not pass through intersection '{}'",
                            ph.name, is.id
                        )));
                    }
                    if !adjacency[a_id.0].contains(&b_id) {
                        return Err(Error::Structural(format!(
                            "phase '{}' movement ({a}, {b}) is not a lane connection",
                            ph.name
                        )));
                    }
                    if la.movement == Movement::Right {
                        return Err(Error::Structural(format!(
                            "phase '{}' contains right-turn lane '{a}'; right turns are always permitted",
                            ph.name
                        )));
                    }
                    mask[incoming_slot[a_id.0].expect("incoming lane has slot")] = true;
                    movements.push((a_id, b_id));
                }
                phases.push(Phase {
                    name: ph.name.clone(),
                    movements,
                });
                green.push(mask);
            }
            intersections.push(Intersection {
                id,
                name: is.id.clone(),
                incoming,
                outgoing,
                phases,
                green,
            });
        }

        Ok(RoadNetwork {
            intersections,
            lanes,
            adjacency,
            incoming_slot,
            lane_index,
            intersection_index,
        })
    }

    pub fn lane(&self, id: LaneId) -> &Lane {
        &self.lanes[id.0]
    }

    pub fn intersection(&self, id: IntersectionId) -> &Intersection {
        &self.intersections[id.0]
    }

    pub fn lane_by_name(&self, name: &str) -> Option<LaneId> {
        self.lane_index.get(name).copied()
    }

    pub fn intersection_by_name(&self, name: &str) -> Option<IntersectionId> {
        self.intersection_index.get(name).copied()
    }

    pub fn incoming_slot(&self, lane: LaneId) -> Option<usize> {
        self.incoming_slot[lane.0]
    }

    pub fn num_intersections(&self) -> usize {
        self.intersections.len()
    }

    pub fn entry_lanes(&self) -> impl Iterator<Item = &Lane> {
        self.lanes.iter().filter(|l| l.is_entry())
    }

    pub fn exit_lanes(&self) -> impl Iterator<Item = &Lane> {
        self.lanes.iter().filter(|l| l.is_exit())
    }

    /// Checks that `route` is a connected lane sequence from an entry lane.
    pub fn validate_route(&self, route: &[LaneId]) -> Result<()> {
        let first = route
            .first()
            .ok_or_else(|| Error::InvalidFlow("empty route".into()))?;
        if !self.lane(*first).is_entry() {
            return Err(Error::InvalidFlow(format!(
                "route starts at '{}', which is not an entry lane",
                self.lane(*first).name
            )));
        }
        for w in route.windows(2) {
            if !self.adjacency[w[0].0].contains(&w[1]) {
                return Err(Error::InvalidFlow(format!(
                    "route jumps from '{}' to unconnected lane '{}'",
                    self.lane(w[0]).name,
                    self.lane(w[1]).name
                )));
            }
        }
        Ok(())
    }
}
