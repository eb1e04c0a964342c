use rand::Rng;

use crate::error::{check_len, Error, Result};
use crate::kv::{KvReader, KvWriter};

/// One stored transition. `action` is the action as executed.
#[derive(Debug, Clone, PartialEq)]
pub struct Experience {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub homotopy_reward: f64,
    pub next_state: Vec<f64>,
}

/// Fixed-capacity FIFO replay memory: once full, each insertion overwrites
/// the oldest experience.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Experience>,
    cursor: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay buffer capacity must be positive");
        Self {
            capacity,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            cursor: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, exp: Experience) -> Result<()> {
        let finite = exp.homotopy_reward.is_finite()
            && exp
                .state
                .iter()
                .chain(&exp.action)
                .chain(&exp.next_state)
                .all(|x| x.is_finite());
        if !finite {
            return Err(Error::NonFinite("experience"));
        }
        if let Some(first) = self.items.first() {
            check_len("experience state", first.state.len(), exp.state.len())?;
            check_len("experience action", first.action.len(), exp.action.len())?;
            check_len("experience next state", first.next_state.len(), exp.next_state.len())?;
        }
        if self.items.len() < self.capacity {
            self.items.push(exp);
        } else {
            self.items[self.cursor] = exp;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
        Ok(())
    }

    /// Experiences from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &Experience> {
        let split = if self.items.len() < self.capacity {
            0
        } else {
            self.cursor
        };
        self.items[split..].iter().chain(&self.items[..split])
    }

    /// `n` distinct experiences drawn uniformly at random.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<&Experience> {
        assert!(n <= self.items.len(), "minibatch larger than buffer");
        rand::seq::index::sample(rng, self.items.len(), n)
            .into_iter()
            .map(|i| &self.items[i])
            .collect()
    }

    pub(crate) fn write(&self, w: &mut KvWriter, prefix: &str) {
        w.put(
            &format!("{prefix}.buffer"),
            format!("{} {} {}", self.capacity, self.items.len(), self.cursor),
        );
        for e in &self.items {
            w.put_seq(&format!("{prefix}.s"), &e.state)
                .put_seq(&format!("{prefix}.a"), &e.action)
                .put(&format!("{prefix}.r"), e.homotopy_reward)
                .put_seq(&format!("{prefix}.s2"), &e.next_state);
        }
    }

    pub(crate) fn read(r: &mut KvReader<'_>, prefix: &str) -> Result<Self> {
        let header: Vec<usize> = r.get_seq(&format!("{prefix}.buffer"))?;
        let [capacity, len, cursor] = header[..] else {
            return Err(Error::InvalidArgument("malformed buffer header".into()));
        };
        if capacity == 0 || len > capacity || cursor >= capacity {
            return Err(Error::InvalidArgument("inconsistent buffer header".into()));
        }
        let mut items = Vec::with_capacity(len);
        for _ in 0..len {
            items.push(Experience {
                state: r.get_seq(&format!("{prefix}.s"))?,
                action: r.get_seq(&format!("{prefix}.a"))?,
                homotopy_reward: r.get(&format!("{prefix}.r"))?,
                next_state: r.get_seq(&format!("{prefix}.s2"))?,
            });
        }
        Ok(Self {
            capacity,
            items,
            cursor,
        })
    }
}
