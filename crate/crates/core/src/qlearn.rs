//! Q-learning over the discrete ACO parameter grid.
//!
//! A state is one setting of (archive size, ants, q, xi) drawn from
//! per-parameter value lists. An action keeps the setting or moves a single
//! parameter one step up or down its list.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Parameter values an ACO generation runs with.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AcoParams {
    pub archive_size: usize,
    pub ants: usize,
    pub q: f64,
    pub xi: f64,
}

impl fmt::Display for AcoParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "k={} ants={} q={} xi={}", self.archive_size, self.ants, self.q, self.xi)
    }
}

/// Value lists of the tuned parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSpace {
    pub archive_size: Vec<usize>,
    pub ants: Vec<usize>,
    pub q: Vec<f64>,
    pub xi: Vec<f64>,
}

pub const NUM_PARAMS: usize = 4;
pub const NUM_ACTIONS: usize = 1 + 2 * NUM_PARAMS;

impl ParamSpace {
    /// Default grid for an instance with `n` items.
    pub fn for_items(n: usize) -> Self {
        let archive_size = if n < 100 { vec![25, 30] } else { vec![55, 60] };
        ParamSpace {
            archive_size,
            ants: vec![2, 3],
            q: vec![0.0001, 0.001, 0.1, 0.3],
            xi: vec![0.80, 0.85],
        }
    }

    /// Every list must be non-empty with positive entries.
    pub fn validate(&self) -> Result<(), String> {
        let sizes = [
            ("archive_size", self.archive_size.len()),
            ("ants", self.ants.len()),
            ("q", self.q.len()),
            ("xi", self.xi.len()),
        ];
        if let Some((name, _)) = sizes.iter().find(|(_, len)| *len == 0) {
            return Err(format!("parameter list `{name}` is empty"));
        }
        if self.archive_size.contains(&0) || self.ants.contains(&0) {
            return Err("archive sizes and ant counts must be positive".into());
        }
        if self.q.iter().chain(&self.xi).any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err("q and xi values must be positive".into());
        }
        Ok(())
    }

    fn dims(&self) -> [usize; NUM_PARAMS] {
        [self.archive_size.len(), self.ants.len(), self.q.len(), self.xi.len()]
    }

    pub fn num_states(&self) -> usize {
        self.dims().iter().product()
    }

    fn split(&self, state: usize) -> [usize; NUM_PARAMS] {
        let dims = self.dims();
        let mut idx = [0; NUM_PARAMS];
        let mut rest = state;
        for p in (0..NUM_PARAMS).rev() {
            idx[p] = rest % dims[p];
            rest /= dims[p];
        }
        idx
    }

    fn join(&self, idx: [usize; NUM_PARAMS]) -> usize {
        let dims = self.dims();
        idx.iter().zip(dims).fold(0, |acc, (&i, d)| acc * d + i)
    }

    pub fn params(&self, state: usize) -> AcoParams {
        let [k, a, q, xi] = self.split(state);
        AcoParams {
            archive_size: self.archive_size[k],
            ants: self.ants[a],
            q: self.q[q],
            xi: self.xi[xi],
        }
    }

    /// State reached by `action`, or `None` when it leaves the grid.
    /// Action 0 keeps the state; `1 + 2p` raises parameter `p`, `2 + 2p`
    /// lowers it.
    pub fn apply(&self, state: usize, action: usize) -> Option<usize> {
        if action == 0 {
            return Some(state);
        }
        let p = (action - 1) / 2;
        let up = (action - 1).is_multiple_of(2);
        let mut idx = self.split(state);
        if up {
            if idx[p] + 1 >= self.dims()[p] {
                return None;
            }
            idx[p] += 1;
        } else {
            if idx[p] == 0 {
                return None;
            }
            idx[p] -= 1;
        }
        Some(self.join(idx))
    }

    pub fn valid_actions(&self, state: usize) -> Vec<usize> {
        (0..NUM_ACTIONS).filter(|&a| self.apply(state, a).is_some()).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QlConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon0: f64,
    pub epsilon_min: f64,
}

impl Default for QlConfig {
    fn default() -> Self {
        QlConfig {
            alpha: 0.1,
            gamma: 0.8,
            epsilon0: 0.3,
            epsilon_min: 0.05,
        }
    }
}

impl QlConfig {
    pub fn validate(&self) -> Result<(), String> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !(unit(self.alpha) && unit(self.gamma) && unit(self.epsilon0) && unit(self.epsilon_min)) {
            return Err("ql.alpha, ql.gamma, ql.epsilon0 and ql.epsilon_min must lie in [0, 1]".into());
        }
        Ok(())
    }
}

/// Relative improvement of the best objective over one generation.
pub fn reward(f_prev: f64, f_new: f64) -> f64 {
    if f_prev == 0.0 {
        return 0.0;
    }
    (f_prev - f_new) / f_prev
}

#[derive(Clone, Debug)]
pub struct QLearner {
    space: ParamSpace,
    cfg: QlConfig,
    table: Vec<[f64; NUM_ACTIONS]>,
    state: usize,
    last: Option<(usize, usize)>,
    epsilon: f64,
}

impl QLearner {
    pub fn new(space: ParamSpace, cfg: QlConfig) -> Self {
        let states = space.num_states();
        QLearner {
            space,
            cfg,
            table: vec![[0.0; NUM_ACTIONS]; states],
            state: 0,
            last: None,
            epsilon: cfg.epsilon0,
        }
    }

    pub fn space(&self) -> &ParamSpace {
        &self.space
    }

    pub fn state(&self) -> usize {
        self.state
    }

    pub fn params(&self) -> AcoParams {
        self.space.params(self.state)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn q_value(&self, state: usize, action: usize) -> f64 {
        self.table[state][action]
    }

    /// Starts from a uniformly drawn state with an empty table.
    pub fn init<R: Rng + ?Sized>(&mut self, rng: &mut R) -> AcoParams {
        for row in &mut self.table {
            *row = [0.0; NUM_ACTIONS];
        }
        self.state = rng.random_range(0..self.space.num_states());
        self.last = None;
        self.epsilon = self.cfg.epsilon0;
        self.params()
    }

    /// Decays exploration linearly from `epsilon0` to `epsilon_min` as the
    /// budget fraction `progress` goes from 0 to 1.
    pub fn set_progress(&mut self, progress: f64) {
        let t = progress.clamp(0.0, 1.0);
        self.epsilon = self.cfg.epsilon0 * (1.0 - t) + self.cfg.epsilon_min * t;
    }

    /// Overrides the exploration rate.
    pub fn set_epsilon(&mut self, epsilon: f64) {
        self.epsilon = epsilon;
    }

    fn best_value(&self, state: usize) -> f64 {
        self.space
            .valid_actions(state)
            .into_iter()
            .map(|a| self.table[state][a])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Credits `reward` to the previous action, then picks and applies the
    /// next one epsilon-greedily. Returns the new parameters.
    pub fn step<R: Rng + ?Sized>(&mut self, reward: f64, rng: &mut R) -> AcoParams {
        if let Some((s, a)) = self.last {
            let target = reward + self.cfg.gamma * self.best_value(self.state);
            let q = &mut self.table[s][a];
            *q += self.cfg.alpha * (target - *q);
        }
        let actions = self.space.valid_actions(self.state);
        let action = if rng.random::<f64>() < self.epsilon {
            actions[rng.random_range(0..actions.len())]
        } else {
            let row = &self.table[self.state];
            let top = actions.iter().map(|&a| row[a]).fold(f64::NEG_INFINITY, f64::max);
            let ties: Vec<usize> = actions.into_iter().filter(|&a| row[a] == top).collect();
            ties[rng.random_range(0..ties.len())]
        };
        let from = self.state;
        self.state = self.space.apply(from, action).expect("valid action");
        self.last = Some((from, action));
        self.params()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn xi_only() -> ParamSpace {
        ParamSpace {
            archive_size: vec![10],
            ants: vec![10],
            q: vec![0.1],
            xi: vec![0.80, 0.85],
        }
    }

    #[test]
    fn state_round_trip_and_moves() {
        let space = ParamSpace::for_items(40);
        assert_eq!(space.num_states(), 2 * 2 * 4 * 2);
        for s in 0..space.num_states() {
            assert_eq!(space.join(space.split(s)), s);
            for a in space.valid_actions(s) {
                let t = space.apply(s, a).unwrap();
                let diff = space
                    .split(s)
                    .iter()
                    .zip(space.split(t))
                    .filter(|(x, y)| **x != *y)
                    .count();
                assert_eq!(diff, usize::from(a != 0));
            }
        }
        assert_eq!(space.params(0).q, 0.0001);
        assert_eq!(ParamSpace::for_items(100).archive_size, vec![55, 60]);
    }

    #[test]
    fn singleton_space_only_keeps() {
        let space = ParamSpace {
            archive_size: vec![5],
            ants: vec![5],
            q: vec![0.1],
            xi: vec![0.85],
        };
        assert_eq!(space.valid_actions(0), vec![0]);
    }

    #[test]
    fn zero_learning_rate_freezes_the_table() {
        let cfg = QlConfig {
            alpha: 0.0,
            ..Default::default()
        };
        let mut ql = QLearner::new(ParamSpace::for_items(10), cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        ql.init(&mut rng);
        for t in 0..200 {
            ql.step(t as f64 * 0.01, &mut rng);
        }
        assert!(ql.table.iter().all(|row| row.iter().all(|&q| q == 0.0)));
    }

    #[test]
    fn reward_values() {
        assert_eq!(reward(100.0, 90.0), 0.1);
        assert_eq!(reward(100.0, 100.0), 0.0);
        assert_eq!(reward(0.0, 0.0), 0.0);
    }

    #[test]
    fn epsilon_decays_linearly() {
        let mut ql = QLearner::new(xi_only(), QlConfig::default());
        ql.set_progress(0.5);
        assert!((ql.epsilon() - 0.175).abs() < 1e-15);
        ql.set_progress(2.0);
        assert_eq!(ql.epsilon(), 0.05);
    }
}
