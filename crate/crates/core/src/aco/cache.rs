use std::collections::{HashMap, VecDeque};

use crate::solution::Evaluation;

/// Default cache capacity.
pub const Q_MAX: usize = 1000;

/// Bounded memo of decoded evaluations keyed by decode key, evicting the
/// oldest insertion first.
#[derive(Clone, Debug)]
pub struct DecodeCache {
    map: HashMap<String, Evaluation>,
    order: VecDeque<String>,
    capacity: usize,
    hits: u64,
    misses: u64,
}

impl DecodeCache {
    pub fn new(capacity: usize) -> Self {
        DecodeCache {
            map: HashMap::with_capacity(capacity.min(4096)),
            order: VecDeque::with_capacity(capacity.min(4096)),
            capacity,
            hits: 0,
            misses: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Looks up a key, counting the hit or miss.
    pub fn get(&mut self, key: &str) -> Option<Evaluation> {
        match self.map.get(key) {
            Some(&v) => {
                self.hits += 1;
                Some(v)
            }
            None => {
                self.misses += 1;
                None
            }
        }
    }

    /// Looks up a key without touching the statistics.
    pub fn peek(&self, key: &str) -> Option<Evaluation> {
        self.map.get(key).copied()
    }

    pub fn insert(&mut self, key: String, value: Evaluation) {
        if self.capacity == 0 {
            return;
        }
        if let Some(slot) = self.map.get_mut(&key) {
            *slot = value;
            return;
        }
        while self.map.len() >= self.capacity {
            match self.order.pop_front() {
                Some(old) => {
                    self.map.remove(&old);
                }
                None => break,
            }
        }
        self.order.push_back(key.clone());
        self.map.insert(key, value);
    }

    pub fn hits(&self) -> u64 {
        self.hits
    }

    pub fn misses(&self) -> u64 {
        self.misses
    }

    /// Share of lookups answered from the cache; zero before any lookup.
    pub fn hit_rate(&self) -> f64 {
        let total = self.hits + self.misses;
        if total == 0 {
            0.0
        } else {
            self.hits as f64 / total as f64
        }
    }

    pub fn clear(&mut self) {
        self.map.clear();
        self.order.clear();
        self.hits = 0;
        self.misses = 0;
    }
}
