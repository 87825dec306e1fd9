use serde::{Deserialize, Serialize};

use crate::sim::{LaneId, Movement, RoadNetwork};

/// Signalized movements made by vehicles (one per intersection crossed).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurningCounts {
    pub left: u64,
    pub straight: u64,
    pub right: u64,
}

impl TurningCounts {
    pub fn add(&mut self, m: Movement) {
        match m {
            Movement::Left => self.left += 1,
            Movement::Straight => self.straight += 1,
            Movement::Right => self.right += 1,
        }
    }

    /// Left and straight percentages of all left+straight movements (right
    /// turns are never signal-controlled and are excluded).
    pub fn left_straight_pct(&self) -> (f64, f64) {
        shares(self.left as f64, self.straight as f64)
    }
}

fn shares(left: f64, straight: f64) -> (f64, f64) {
    let d = left + straight;
    if d == 0.0 {
        (0.0, 0.0)
    } else {
        (100.0 * left / d, 100.0 * straight / d)
    }
}

/// Movements made along a route (the exit lane makes none).
pub fn route_movements<'a>(net: &'a RoadNetwork, route: &'a [LaneId]) -> impl Iterator<Item = Movement> + 'a {
    route.iter().filter(|l| net.lane(**l).to.is_some()).map(|l| net.lane(*l).movement)
}

/// Turning counts over vehicles given by their route indices.
pub fn turning_counts(net: &RoadNetwork, routes: &[Vec<LaneId>], vehicle_routes: impl IntoIterator<Item = usize>) -> TurningCounts {
    let mut c = TurningCounts::default();
    for r in vehicle_routes {
        route_movements(net, &routes[r]).for_each(|m| c.add(m));
    }
    c
}

/// Expected (left %, straight %) under the route weights.
pub fn expected_left_straight_pct(net: &RoadNetwork, routes: &[Vec<LaneId>], weights: &[f64]) -> (f64, f64) {
    let (mut left, mut straight) = (0.0, 0.0);
    for (r, w) in routes.iter().zip(weights) {
        for m in route_movements(net, r) {
            match m {
                Movement::Left => left += w,
                Movement::Straight => straight += w,
                Movement::Right => {}
            }
        }
    }
    shares(left, straight)
}

/// Per-agent phase usage in percent.
pub fn phase_distribution(counts: &[Vec<u64>]) -> Vec<Vec<f64>> {
    counts
        .iter()
        .map(|c| {
            let total: u64 = c.iter().sum();
            c.iter()
                .map(|&x| if total == 0 { 0.0 } else { 100.0 * x as f64 / total as f64 })
                .collect()
        })
        .collect()
}
