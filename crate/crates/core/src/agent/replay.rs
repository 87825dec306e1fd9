use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_obs: Vec<f64>,
    pub terminal: bool,
}

/// Bounded FIFO experience store.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<Transition>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        ReplayBuffer {
            capacity,
            items: VecDeque::new(),
        }
    }

    pub fn store(&mut self, t: Transition) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
    }

    pub fn clear(&mut self) {
        self.items.clear();
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<&Transition> {
        self.items.get(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }

    /// `n` indices drawn uniformly with replacement.
    pub fn sample_indices(&self, n: usize, rng: &mut impl Rng) -> Vec<usize> {
        if self.items.is_empty() {
            return Vec::new();
        }
        (0..n).map(|_| rng.random_range(0..self.items.len())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(r: f64) -> Transition {
        Transition {
            obs: vec![0.0],
            action: 0,
            reward: r,
            next_obs: vec![0.0],
            terminal: false,
        }
    }

    #[test]
    fn store_then_clear() {
        let mut b = ReplayBuffer::new(4);
        b.store(t(-1.0));
        assert_eq!(b.len(), 1);
        b.clear();
        assert!(b.is_empty());
        b.clear();
        assert!(b.is_empty());
    }

    #[test]
    fn fifo_eviction() {
        let mut b = ReplayBuffer::new(3);
        for k in 0..5 {
            b.store(t(-(k as f64)));
        }
        let rewards: Vec<f64> = b.iter().map(|x| x.reward).collect();
        assert_eq!(rewards, vec![-2.0, -3.0, -4.0]);
    }

    #[test]
    fn default_capacity_bound() {
        let mut b = ReplayBuffer::new(10_000);
        for k in 0..10_005 {
            b.store(t(-(k as f64)));
        }
        assert_eq!(b.len(), 10_000);
        assert_eq!(b.get(0).unwrap().reward, -5.0);
    }
}
