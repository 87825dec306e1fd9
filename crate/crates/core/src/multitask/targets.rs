use serde::{Deserialize, Serialize};

/// Supervised signals for the four auxiliary tasks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskTargets {
    pub flow_mean: f64,
    pub flow_var: f64,
    pub travel_mean: f64,
    pub travel_var: f64,
    /// False until at least one trip has completed; the travel task is
    /// masked out of the loss while false.
    pub travel_valid: bool,
    pub next_queue: f64,
    pub on_road: f64,
}

impl TaskTargets {
    pub fn to_array(&self) -> [f64; 6] {
        [
            self.flow_mean,
            self.flow_var,
            self.travel_mean,
            self.travel_var,
            self.next_queue,
            self.on_road,
        ]
    }
}

/// Population mean and variance of an integer series, computed from exact
/// integer sums.
#[derive(Clone, Copy, Debug, Default)]
struct IntMoments {
    n: u64,
    sum: u128,
    sum_sq: u128,
}

impl IntMoments {
    fn add(&mut self, x: u64) {
        self.n += 1;
        self.sum += x as u128;
        self.sum_sq += (x as u128) * (x as u128);
    }

    fn mean_var(&self) -> (f64, f64) {
        if self.n == 0 {
            return (0.0, 0.0);
        }
        let n = self.n as u128;
        let mean = self.sum as f64 / self.n as f64;
        let var_num = n * self.sum_sq - self.sum * self.sum;
        (mean, var_num as f64 / (n * n) as f64)
    }
}

/// Mean and population variance of per-epoch arrival counts.
pub fn flow_statistics(counts: &[u64]) -> (f64, f64) {
    let mut m = IntMoments::default();
    counts.iter().for_each(|&c| m.add(c));
    m.mean_var()
}

/// Running episode statistics from which targets are derived.
#[derive(Clone, Debug, Default)]
pub struct EpisodeTracker {
    arrivals: IntMoments,
    trips: IntMoments,
    trips_seen: usize,
}

impl EpisodeTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record_epoch_arrivals(&mut self, count: u64) {
        self.arrivals.add(count);
    }

    /// Adds trips from `completed[trips_seen..]`.
    pub fn record_trips(&mut self, durations: impl IntoIterator<Item = u64>) {
        for d in durations {
            self.trips.add(d);
            self.trips_seen += 1;
        }
    }

    pub fn trips_seen(&self) -> usize {
        self.trips_seen
    }

    pub fn epochs(&self) -> u64 {
        self.arrivals.n
    }

    pub fn targets(&self, next_queue: f64, on_road: f64) -> TaskTargets {
        let (flow_mean, flow_var) = self.arrivals.mean_var();
        let (travel_mean, travel_var) = self.trips.mean_var();
        TaskTargets {
            flow_mean,
            flow_var,
            travel_mean,
            travel_var,
            travel_valid: self.trips.n > 0,
            next_queue,
            on_road,
        }
    }
}

/// Per-scalar running z-score over all targets observed so far.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct TargetNormalizer {
    count: [u64; 6],
    mean: [f64; 6],
    m2: [f64; 6],
}

impl TargetNormalizer {
    pub fn observe(&mut self, t: &TaskTargets) {
        for (k, x) in t.to_array().into_iter().enumerate() {
            if (k == 2 || k == 3) && !t.travel_valid {
                continue;
            }
            self.count[k] += 1;
            let d = x - self.mean[k];
            self.mean[k] += d / self.count[k] as f64;
            self.m2[k] += d * (x - self.mean[k]);
        }
    }

    fn std(&self, k: usize) -> f64 {
        if self.count[k] == 0 {
            return 1.0;
        }
        let s = (self.m2[k] / self.count[k] as f64).sqrt();
        if s > 1e-6 {
            s
        } else {
            1.0
        }
    }

    pub fn normalize(&self, t: &TaskTargets) -> [f64; 6] {
        let mut z = t.to_array();
        for (k, v) in z.iter_mut().enumerate() {
            *v = (*v - self.mean[k]) / self.std(k);
        }
        z
    }

    pub fn denormalize(&self, z: &[f64; 6]) -> [f64; 6] {
        let mut x = *z;
        for (k, v) in x.iter_mut().enumerate() {
            *v = *v * self.std(k) + self.mean[k];
        }
        x
    }
}
