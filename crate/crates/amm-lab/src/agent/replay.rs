//! Bounded experience-replay buffer.

use ndarray::Array2;
use rand::Rng;
use std::collections::VecDeque;

/// One interaction: state window, action index, reward, successor window.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Array2<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Array2<f64>,
    pub terminal: bool,
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    buffer: VecDeque<Transition>,
    capacity: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer {
            buffer: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn push(&mut self, transition: Transition) {
        if self.buffer.len() == self.capacity {
            self.buffer.pop_front();
        }
        self.buffer.push_back(transition);
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn get(&self, idx: usize) -> &Transition {
        &self.buffer[idx]
    }

    /// Uniform sample of `batch` indices (with replacement).
    pub fn sample_indices<R: Rng>(&self, rng: &mut R, batch: usize) -> Vec<usize> {
        (0..batch)
            .map(|_| rng.gen_range(0..self.buffer.len()))
            .collect()
    }
}
