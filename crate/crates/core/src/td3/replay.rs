use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_obs: Vec<f64>,
    /// Set only for true terminations. Time-limit truncation keeps it false so
    /// the target still bootstraps from `next_obs`.
    pub done_for_bootstrap: bool,
}

/// Fixed-capacity FIFO ring of transitions in flat storage.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    obs_dim: usize,
    act_dim: usize,
    capacity: usize,
    cursor: usize,
    len: usize,
    obs: Vec<f64>,
    actions: Vec<f64>,
    rewards: Vec<f64>,
    next_obs: Vec<f64>,
    dones: Vec<bool>,
}

/// Column-wise minibatch gathered from a [`ReplayBuffer`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Batch {
    pub size: usize,
    pub obs: Vec<f64>,
    pub actions: Vec<f64>,
    pub rewards: Vec<f64>,
    pub next_obs: Vec<f64>,
    pub dones: Vec<bool>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, obs_dim: usize, act_dim: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            obs_dim,
            act_dim,
            capacity,
            cursor: 0,
            len: 0,
            obs: vec![0.0; capacity * obs_dim],
            actions: vec![0.0; capacity * act_dim],
            rewards: vec![0.0; capacity],
            next_obs: vec![0.0; capacity * obs_dim],
            dones: vec![false; capacity],
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, t: &Transition) {
        assert_eq!(t.obs.len(), self.obs_dim);
        assert_eq!(t.next_obs.len(), self.obs_dim);
        assert_eq!(t.action.len(), self.act_dim);
        let i = self.cursor;
        let (od, ad) = (self.obs_dim, self.act_dim);
        self.obs[i * od..(i + 1) * od].copy_from_slice(&t.obs);
        self.next_obs[i * od..(i + 1) * od].copy_from_slice(&t.next_obs);
        self.actions[i * ad..(i + 1) * ad].copy_from_slice(&t.action);
        self.rewards[i] = t.reward;
        self.dones[i] = t.done_for_bootstrap;
        self.cursor = (self.cursor + 1) % self.capacity;
        self.len = (self.len + 1).min(self.capacity);
    }

    /// Slot `i` in storage order (`0..len`).
    pub fn get(&self, i: usize) -> Option<Transition> {
        if i >= self.len {
            return None;
        }
        let (od, ad) = (self.obs_dim, self.act_dim);
        Some(Transition {
            obs: self.obs[i * od..(i + 1) * od].to_vec(),
            action: self.actions[i * ad..(i + 1) * ad].to_vec(),
            reward: self.rewards[i],
            next_obs: self.next_obs[i * od..(i + 1) * od].to_vec(),
            done_for_bootstrap: self.dones[i],
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = Transition> + '_ {
        (0..self.len).filter_map(|i| self.get(i))
    }

    /// Uniform sampling with replacement over filled slots.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, size: usize, out: &mut Batch) {
        assert!(self.len > 0, "sampling from an empty replay buffer");
        let (od, ad) = (self.obs_dim, self.act_dim);
        out.size = size;
        out.obs.clear();
        out.actions.clear();
        out.rewards.clear();
        out.next_obs.clear();
        out.dones.clear();
        for _ in 0..size {
            let i = rng.random_range(0..self.len);
            out.obs.extend_from_slice(&self.obs[i * od..(i + 1) * od]);
            out.actions.extend_from_slice(&self.actions[i * ad..(i + 1) * ad]);
            out.rewards.push(self.rewards[i]);
            out.next_obs.extend_from_slice(&self.next_obs[i * od..(i + 1) * od]);
            out.dones.push(self.dones[i]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn tr(k: usize) -> Transition {
        Transition {
            obs: vec![k as f64],
            action: vec![0.0],
            reward: k as f64,
            next_obs: vec![k as f64 + 1.0],
            done_for_bootstrap: false,
        }
    }

    #[test]
    fn fifo_overwrite_drops_oldest() {
        let cap = 8;
        let k = 3;
        let mut buf = ReplayBuffer::new(cap, 1, 1);
        for i in 0..cap + k {
            buf.push(&tr(i));
        }
        assert_eq!(buf.len(), cap);
        let mut rng = SplitMix64::new(0);
        let mut batch = Batch::default();
        buf.sample_into(&mut rng, 2000, &mut batch);
        assert!(batch.rewards.iter().all(|&r| r >= k as f64));
        let stored: Vec<f64> = buf.iter().map(|t| t.reward).collect();
        let mut sorted = stored.clone();
        sorted.sort_by(f64::total_cmp);
        assert_eq!(sorted, (k..cap + k).map(|i| i as f64).collect::<Vec<_>>());
    }

    #[test]
    fn samples_only_filled_slots() {
        let mut buf = ReplayBuffer::new(100, 1, 1);
        buf.push(&tr(7));
        buf.push(&tr(9));
        let mut rng = SplitMix64::new(3);
        let mut batch = Batch::default();
        buf.sample_into(&mut rng, 64, &mut batch);
        assert!(batch.rewards.iter().all(|&r| r == 7.0 || r == 9.0));
        assert!(buf.get(2).is_none());
    }
}
