use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

/// Global indicators sampled once per decision epoch.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Indicators {
    /// Vehicles that entered the network during the epoch.
    pub incoming: f64,
    /// Mean duration of completed trips so far.
    pub travel_time: f64,
    /// Total queued vehicles at the end of the epoch.
    pub queue: f64,
    /// Vehicles inside the network at the end of the epoch.
    pub on_road: f64,
}

/// Fixed-length windows of the last `tau` indicator values, zero-filled at
/// episode start.
#[derive(Clone, Debug)]
pub struct HistoryBuffer {
    tau: usize,
    series: [VecDeque<f64>; 4],
}

impl HistoryBuffer {
    pub fn new(tau: usize) -> Self {
        let zeros = || VecDeque::from(vec![0.0; tau]);
        HistoryBuffer {
            tau,
            series: [zeros(), zeros(), zeros(), zeros()],
        }
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn reset(&mut self) {
        *self = HistoryBuffer::new(self.tau);
    }

    pub fn push(&mut self, ind: Indicators) {
        let vals = [ind.incoming, ind.travel_time, ind.queue, ind.on_road];
        for (s, v) in self.series.iter_mut().zip(vals) {
            s.pop_front();
            s.push_back(v);
        }
    }

    /// The four windows (incoming, travel, queue, on-road), oldest first.
    pub fn windows(&self) -> [Vec<f64>; 4] {
        self.series.clone().map(Vec::from)
    }

    /// All four windows concatenated after `ln(1 + x)` compression.
    pub fn features(&self) -> Vec<f64> {
        self.series.iter().flatten().map(|x| x.ln_1p()).collect()
    }
}
