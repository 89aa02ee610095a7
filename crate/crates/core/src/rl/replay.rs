use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Opponent signal attached to a transition for multitask training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Supervision<T> {
    Class(usize),
    Value(T),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition<T> {
    pub state_features: Vec<T>,
    pub opponent_features: Vec<T>,
    pub action: usize,
    pub reward: T,
    pub next_state_features: Vec<T>,
    pub next_opponent_features: Vec<T>,
    pub terminal: bool,
    pub supervision: Option<Supervision<T>>,
}

/// Fixed-capacity ring of transitions, oldest evicted first.
#[derive(Debug, Clone)]
pub struct ReplayBuffer<T> {
    capacity: usize,
    storage: Vec<Transition<T>>,
    next: usize,
}

impl<T: Scalar> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::config("replay capacity must be positive"));
        }
        Ok(Self {
            capacity,
            storage: Vec::with_capacity(capacity.min(1 << 16)),
            next: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    pub fn push(&mut self, transition: Transition<T>) {
        if self.storage.len() < self.capacity {
            self.storage.push(transition);
        } else {
            self.storage[self.next] = transition;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    /// Stored transitions from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &Transition<T>> {
        let split = if self.storage.len() < self.capacity {
            0
        } else {
            self.next
        };
        self.storage[split..].iter().chain(&self.storage[..split])
    }

    /// `batch` draws, uniform with replacement.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        batch: usize,
        rng: &mut R,
    ) -> Result<Vec<&Transition<T>>> {
        if self.storage.is_empty() {
            return Err(Error::usage("cannot sample from an empty replay buffer"));
        }
        Ok((0..batch)
            .map(|_| &self.storage[rng.random_range(0..self.storage.len())])
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn item(reward: f64) -> Transition<f64> {
        Transition {
            state_features: vec![reward],
            opponent_features: vec![],
            action: 0,
            reward,
            next_state_features: vec![reward],
            next_opponent_features: vec![],
            terminal: false,
            supervision: None,
        }
    }

    #[test]
    fn push_into_empty_buffer() {
        let mut b = ReplayBuffer::new(4).unwrap();
        b.push(item(1.0));
        assert_eq!(b.len(), 1);
    }

    #[test]
    fn oldest_item_is_evicted() {
        let mut b = ReplayBuffer::new(2).unwrap();
        for r in [1.0, 2.0, 3.0] {
            b.push(item(r));
        }
        let kept: Vec<f64> = b.iter().map(|t| t.reward).collect();
        assert_eq!(kept, vec![2.0, 3.0]);
    }

    #[test]
    fn sampling_a_single_item_repeats_it() {
        let mut b = ReplayBuffer::new(8).unwrap();
        b.push(item(7.0));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let batch = b.sample(64, &mut rng).unwrap();
        assert_eq!(batch.len(), 64);
        assert!(batch.iter().all(|t| t.reward == 7.0));
    }

    #[test]
    fn sampling_is_seeded() {
        let mut b = ReplayBuffer::new(16).unwrap();
        (0..10).for_each(|i| b.push(item(i as f64)));
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            b.sample(32, &mut rng)
                .unwrap()
                .iter()
                .map(|t| t.reward)
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(5), draw(5));
    }

    #[test]
    fn sampling_is_uniform_within_three_sigma() {
        let mut b = ReplayBuffer::new(10).unwrap();
        (0..10).for_each(|i| b.push(item(i as f64)));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 100_000;
        let mut counts = [0usize; 10];
        for t in b.sample(n, &mut rng).unwrap() {
            counts[t.reward as usize] += 1;
        }
        let sigma = (n as f64 * 0.1 * 0.9).sqrt();
        for c in counts {
            assert!(
                (c as f64 - n as f64 * 0.1).abs() <= 3.0 * sigma,
                "{counts:?}"
            );
        }
    }

    #[test]
    fn empty_buffer_and_zero_capacity_are_errors() {
        assert!(ReplayBuffer::<f64>::new(0).is_err());
        let b = ReplayBuffer::<f64>::new(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(b.sample(1, &mut rng), Err(Error::Usage(_))));
    }
}
