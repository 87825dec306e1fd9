use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use serde::{Deserialize, Serialize};

use super::flow::RouteSpec;
use super::spec::{GridDims, IntersectionSpec, LaneSpec, NetworkSpec, PhaseSpec, FORMAT_VERSION};
use crate::sim::{LaneId, Movement, RoadNetwork};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaneParams {
    pub length: f64,
    pub capacity: usize,
}

impl Default for LaneParams {
    fn default() -> Self {
        LaneParams {
            length: 300.0,
            capacity: 40,
        }
    }
}

/// Travel direction on a grid road. Row 0 is the northern edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Heading {
    North,
    East,
    South,
    West,
}

impl Heading {
    pub const ALL: [Heading; 4] = [Heading::North, Heading::East, Heading::South, Heading::West];

    fn index(self) -> usize {
        self as usize
    }

    fn from_index(i: usize) -> Heading {
        Heading::ALL[i % 4]
    }

    pub fn opposite(self) -> Heading {
        Heading::from_index(self.index() + 2)
    }

    pub fn turn(self, m: Movement) -> Heading {
        match m {
            Movement::Left => Heading::from_index(self.index() + 3),
            Movement::Straight => self,
            Movement::Right => Heading::from_index(self.index() + 1),
        }
    }

    fn delta(self) -> (isize, isize) {
        match self {
            Heading::North => (-1, 0),
            Heading::East => (0, 1),
            Heading::South => (1, 0),
            Heading::West => (0, -1),
        }
    }

    fn tag(self) -> &'static str {
        match self {
            Heading::North => "n",
            Heading::East => "e",
            Heading::South => "s",
            Heading::West => "w",
        }
    }

    fn from_tag(tag: &str) -> Option<Heading> {
        Heading::ALL.into_iter().find(|h| h.tag() == tag)
    }

    pub fn is_north_south(self) -> bool {
        matches!(self, Heading::North | Heading::South)
    }
}

fn node_name(r: usize, c: usize) -> String {
    format!("i_{r}_{c}")
}

fn neighbor(dims: GridDims, r: usize, c: usize, h: Heading) -> Option<(usize, usize)> {
    let (dr, dc) = h.delta();
    let nr = r as isize + dr;
    let nc = c as isize + dc;
    (nr >= 0 && nc >= 0 && (nr as usize) < dims.rows && (nc as usize) < dims.cols)
        .then_some((nr as usize, nc as usize))
}

/// Road arriving at (r, c) from `side`.
fn incoming_road(dims: GridDims, r: usize, c: usize, side: Heading) -> String {
    match neighbor(dims, r, c, side) {
        Some((nr, nc)) => format!("road_{nr}_{nc}_{}", side.opposite().tag()),
        None => format!("entry_{r}_{c}_{}", side.tag()),
    }
}

/// Road leaving (r, c) with heading `h`.
fn outgoing_road(dims: GridDims, r: usize, c: usize, h: Heading) -> String {
    match neighbor(dims, r, c, h) {
        Some(_) => format!("road_{r}_{c}_{}", h.tag()),
        None => format!("exit_{r}_{c}_{}", h.tag()),
    }
}

fn lane_name(road: &str, m: Movement) -> String {
    format!("{road}_{}", m.index())
}

/// Generates a `rows x cols` grid of signalized 4-way intersections with
/// three lanes (left, straight, right) on every approach and four phases:
/// NS-straight, NS-left, EW-straight, EW-left.
pub fn gen_grid(rows: usize, cols: usize, params: &LaneParams) -> Result<NetworkSpec> {
    if rows == 0 || cols == 0 {
        return Err(Error::Config(format!("grid dimensions must be positive, got {rows}x{cols}")));
    }
    let dims = GridDims { rows, cols };
    // (sort key, lane); incoming lanes of each node must come out grouped by
    // approach side N, E, S, W and lane position.
    let mut lanes: Vec<((usize, usize, usize), LaneSpec)> = Vec::new();
    let mut intersections = Vec::new();
    let node_index = |r: usize, c: usize| r * cols + c;

    for r in 0..rows {
        for c in 0..cols {
            let here = node_name(r, c);
            for side in Heading::ALL {
                let heading = side.opposite();
                let road = incoming_road(dims, r, c, side);
                let from = neighbor(dims, r, c, side).map(|(nr, nc)| node_name(nr, nc));
                for m in Movement::ALL {
                    let out = outgoing_road(dims, r, c, heading.turn(m));
                    lanes.push((
                        (node_index(r, c), side.index(), m.index()),
                        LaneSpec {
                            id: lane_name(&road, m),
                            road: road.clone(),
                            from: from.clone(),
                            to: Some(here.clone()),
                            length: params.length,
                            capacity: params.capacity,
                            movement: m,
                            connects_to: Movement::ALL.iter().map(|&o| lane_name(&out, o)).collect(),
                        },
                    ));
                }
                if neighbor(dims, r, c, side).is_none() {
                    let exit = format!("exit_{r}_{c}_{}", side.tag());
                    for m in Movement::ALL {
                        lanes.push((
                            (usize::MAX, node_index(r, c) * 4 + side.index(), m.index()),
                            LaneSpec {
                                id: lane_name(&exit, m),
                                road: exit.clone(),
                                from: Some(here.clone()),
                                to: None,
                                length: params.length,
                                capacity: params.capacity,
                                movement: m,
                                connects_to: Vec::new(),
                            },
                        ));
                    }
                }
            }

            let phase = |name: &str, sides: [Heading; 2], m: Movement| PhaseSpec {
                name: name.into(),
                movements: sides
                    .iter()
                    .flat_map(|&side| {
                        let lane = lane_name(&incoming_road(dims, r, c, side), m);
                        let out = outgoing_road(dims, r, c, side.opposite().turn(m));
                        Movement::ALL.map(move |o| [lane.clone(), lane_name(&out, o)])
                    })
                    .collect(),
            };
            let ns = [Heading::North, Heading::South];
            let ew = [Heading::East, Heading::West];
            intersections.push(IntersectionSpec {
                id: here,
                phases: vec![
                    phase("ns_straight", ns, Movement::Straight),
                    phase("ns_left", ns, Movement::Left),
                    phase("ew_straight", ew, Movement::Straight),
                    phase("ew_left", ew, Movement::Left),
                ],
            });
        }
    }
    lanes.sort_by_key(|(k, _)| *k);
    Ok(NetworkSpec {
        format_version: FORMAT_VERSION,
        grid: Some(dims),
        intersections,
        lanes: lanes.into_iter().map(|(_, l)| l).collect(),
    })
}

fn turn_cost(net: &RoadNetwork, l: LaneId) -> u32 {
    let lane = net.lane(l);
    u32::from(lane.to.is_some() && lane.movement != Movement::Straight)
}

/// Lanes grouped by road name, each in position order.
fn roads(net: &RoadNetwork) -> BTreeMap<&str, Vec<LaneId>> {
    let mut roads: BTreeMap<&str, Vec<LaneId>> = BTreeMap::new();
    for l in &net.lanes {
        roads.entry(l.road.as_str()).or_default().push(l.id);
    }
    roads
}

/// Shortest (then fewest-turn) route from every entry road to every exit
/// road, skipping pairs that would need a U-turn at the entry intersection.
///
/// On the exit road the vehicle keeps its lane position (a left-turning
/// vehicle takes the exit road's first lane and so on).
pub fn grid_routes(net: &RoadNetwork) -> Vec<Vec<LaneId>> {
    let roads = roads(net);
    let entries: Vec<&Vec<LaneId>> = roads.values().filter(|ls| net.lane(ls[0]).is_entry()).collect();
    let exits: Vec<&Vec<LaneId>> = roads.values().filter(|ls| net.lane(ls[0]).is_exit()).collect();
    let mut routes = Vec::new();

    for entry in entries {
        let n = net.lanes.len();
        let mut cost = vec![(u32::MAX, u32::MAX); n];
        let mut parent: Vec<Option<LaneId>> = vec![None; n];
        let mut heap = BinaryHeap::new();
        for &l in entry {
            cost[l.0] = (1, turn_cost(net, l));
            heap.push(Reverse((cost[l.0], l)));
        }
        while let Some(Reverse((c, l))) = heap.pop() {
            if c > cost[l.0] {
                continue;
            }
            for &next in &net.adjacency[l.0] {
                let nc = (c.0 + 1, c.1 + turn_cost(net, next));
                if nc < cost[next.0] {
                    cost[next.0] = nc;
                    parent[next.0] = Some(l);
                    heap.push(Reverse((nc, next)));
                }
            }
        }
        let entry_node = net.lane(entry[0]).to;
        for exit in &exits {
            let exit_node = net.lane(exit[0]).from;
            let direct = entry
                .iter()
                .any(|&l| net.adjacency[l.0].iter().any(|x| exit.contains(x)));
            if exit_node == entry_node && !direct {
                continue;
            }
            let best = exit
                .iter()
                .copied()
                .filter(|l| cost[l.0].0 != u32::MAX)
                .min_by_key(|&l| {
                    let pred = parent[l.0].map(|p| net.lane(p).movement.index());
                    (cost[l.0], pred != Some(net.lane(l).position), l)
                });
            let Some(mut cur) = best else { continue };
            let mut route = vec![cur];
            while let Some(p) = parent[cur.0] {
                route.push(p);
                cur = p;
            }
            route.reverse();
            routes.push(route);
        }
    }
    routes
}

/// How route weights are assigned over the generated grid routes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RouteWeighting {
    Uniform,
    /// `ns_share` of the demand enters on north/south approaches, split
    /// evenly across those routes; the rest goes to east/west entries.
    Axis { ns_share: f64 },
}

/// Route table for a generated grid, as file-level route specs.
pub fn grid_route_specs(net: &RoadNetwork, weighting: RouteWeighting) -> Result<Vec<RouteSpec>> {
    let routes = grid_routes(net);
    if routes.is_empty() {
        return Err(Error::InvalidFlow("network has no entry-to-exit routes".into()));
    }
    let is_ns = |r: &Vec<LaneId>| -> Result<bool> {
        let road = &net.lane(r[0]).road;
        let side = road
            .rsplit('_')
            .next()
            .and_then(Heading::from_tag)
            .ok_or_else(|| Error::InvalidFlow(format!("'{road}' is not a grid entry road")))?;
        Ok(side.is_north_south())
    };
    let weights: Vec<f64> = match weighting {
        RouteWeighting::Uniform => vec![1.0 / routes.len() as f64; routes.len()],
        RouteWeighting::Axis { ns_share } => {
            if !(0.0..=1.0).contains(&ns_share) {
                return Err(Error::Config(format!("ns_share {ns_share} outside [0, 1]")));
            }
            let flags = routes.iter().map(is_ns).collect::<Result<Vec<_>>>()?;
            let n_ns = flags.iter().filter(|&&f| f).count();
            let n_ew = flags.len() - n_ns;
            if n_ns == 0 || n_ew == 0 {
                return Err(Error::InvalidFlow("grid lacks routes on one axis".into()));
            }
            flags
                .iter()
                .map(|&f| if f { ns_share / n_ns as f64 } else { (1.0 - ns_share) / n_ew as f64 })
                .collect()
        }
    };
    Ok(routes
        .iter()
        .zip(weights)
        .map(|(r, weight)| RouteSpec {
            lanes: r.iter().map(|&l| net.lane(l).name.clone()).collect(),
            weight,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net(rows: usize, cols: usize) -> RoadNetwork {
        RoadNetwork::build(&gen_grid(rows, cols, &LaneParams::default()).unwrap()).unwrap()
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(net(4, 4).num_intersections(), 16);
        assert_eq!(net(4, 3).num_intersections(), 12);
        assert_eq!(net(16, 3).num_intersections(), 48);
        assert_eq!(net(1, 1).num_intersections(), 1);
        assert!(gen_grid(0, 3, &LaneParams::default()).is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let p = LaneParams::default();
        assert_eq!(gen_grid(3, 2, &p).unwrap(), gen_grid(3, 2, &p).unwrap());
    }

    #[test]
    fn incoming_lanes_are_ordered_by_side() {
        let n = net(2, 2);
        for is in &n.intersections {
            assert_eq!(is.incoming.len(), 12);
            for (slot, &l) in is.incoming.iter().enumerate() {
                assert_eq!(n.lane(l).movement.index(), slot % 3);
            }
        }
    }

    #[test]
    fn single_intersection_routes() {
        let n = net(1, 1);
        let routes = grid_routes(&n);
        // 4 entries x 3 non-U-turn exits
        assert_eq!(routes.len(), 12);
        for r in &routes {
            assert_eq!(r.len(), 2);
            n.validate_route(r).unwrap();
            assert!(n.lane(*r.last().unwrap()).is_exit());
            // the exit lane keeps the turning lane's position
            assert_eq!(n.lane(r[1]).position, n.lane(r[0]).movement.index());
        }
    }

    #[test]
    fn routes_start_at_entries_and_end_at_exits() {
        let n = net(4, 4);
        let routes = grid_routes(&n);
        // 16 entry roads x 16 exit roads minus 16 U-turn pairs
        assert_eq!(routes.len(), 16 * 15);
        for r in &routes {
            n.validate_route(r).unwrap();
            assert!(n.lane(r[0]).is_entry());
            assert!(n.lane(*r.last().unwrap()).is_exit());
        }
    }

    #[test]
    fn axis_weights_sum_to_one() {
        let n = net(1, 1);
        let specs = grid_route_specs(&n, RouteWeighting::Axis { ns_share: 0.9 }).unwrap();
        let total: f64 = specs.iter().map(|s| s.weight).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let ns: f64 = specs
            .iter()
            .filter(|s| s.lanes[0].contains("_n_") || s.lanes[0].contains("_s_"))
            .map(|s| s.weight)
            .sum();
        assert!((ns - 0.9).abs() < 1e-12, "{ns}");
    }
}
