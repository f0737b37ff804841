//! Random-key encoding of packings.
//!
//! A key vector has `n + 3` entries in `[0, 1)`. The first `n` keys give the
//! item order (ascending key), the last three select the assignment
//! strategy, the number of pre-opened bins and the relocation probability.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::problem::{AssignRule, Problem};
use crate::refine::{post_process, relocate_items};
use crate::solution::{fits, PackingSolution};

/// Largest value a key is clamped to.
pub const KEY_MAX: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KeyError {
    #[error("a key vector needs n + 3 entries with n >= 1, got {0}")]
    TooShort(usize),
    #[error("key {index} = {value} lies outside [0, 1)")]
    OutOfRange { index: usize, value: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RandomKeyVector(Vec<f64>);

impl RandomKeyVector {
    pub fn new(keys: Vec<f64>) -> Result<Self, KeyError> {
        if keys.len() < 4 {
            return Err(KeyError::TooShort(keys.len()));
        }
        if let Some((index, &value)) = keys.iter().enumerate().find(|(_, &k)| !(0.0..1.0).contains(&k)) {
            return Err(KeyError::OutOfRange { index, value });
        }
        Ok(RandomKeyVector(keys))
    }

    /// Uniform keys for `n` items.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        RandomKeyVector((0..n + 3).map(|_| rng.random::<f64>()).collect())
    }

    /// Wraps keys already known to lie in `[0, 1)`.
    pub(crate) fn from_clamped(mut keys: Vec<f64>) -> Self {
        for k in &mut keys {
            *k = k.clamp(0.0, KEY_MAX);
        }
        RandomKeyVector(keys)
    }

    pub fn keys(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of items encoded.
    pub fn n(&self) -> usize {
        self.0.len() - 3
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Semi-greedy construction following the decoded item order.
    SemiGreedy,
    /// Pre-opens bins seeded with the first items, then best-bin assignment.
    PreOpened,
    /// Best-bin assignment from an empty packing.
    Sequential,
}

impl Strategy {
    pub fn number(self) -> u8 {
        match self {
            Strategy::SemiGreedy => 1,
            Strategy::PreOpened => 2,
            Strategy::Sequential => 3,
        }
    }
}

/// Parameters carried by the last three keys.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecodeConfig {
    pub strategy: Strategy,
    pub initial_bins: usize,
    pub relocation_prob: f64,
}

pub fn decode_genes(rk: &RandomKeyVector) -> DecodeConfig {
    let n = rk.n();
    let genes = &rk.keys()[n..];
    let strategy = match (3.0 * genes[0]).floor() as i64 {
        i64::MIN..=0 => Strategy::SemiGreedy,
        1 => Strategy::PreOpened,
        _ => Strategy::Sequential,
    };
    DecodeConfig {
        strategy,
        initial_bins: ((n as f64 * genes[1]).floor() as usize).min(n),
        relocation_prob: genes[2],
    }
}

/// Items by ascending key; equal keys keep index order.
pub fn sorted_item_order(rk: &RandomKeyVector) -> Vec<usize> {
    let keys = &rk.keys()[..rk.n()];
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]));
    order
}

/// Canonical text of everything the decoder reads from a key vector: the item
/// order and the gene settings. Vectors with the same key decode identically.
pub fn decode_key(rk: &RandomKeyVector) -> String {
    let cfg = decode_genes(rk);
    let order = sorted_item_order(rk);
    let mut key = String::with_capacity(order.len() * 4 + 32);
    for (idx, item) in order.iter().enumerate() {
        if idx > 0 {
            key.push(',');
        }
        let _ = write!(key, "{item}");
    }
    let b0 = if cfg.strategy == Strategy::PreOpened {
        cfg.initial_bins
    } else {
        0
    };
    let _ = write!(
        key,
        "|s{}|b{}|p{:016x}",
        cfg.strategy.number(),
        b0,
        cfg.relocation_prob.to_bits()
    );
    key
}

/// Places `item` in an opened bin it fits, choosing by the problem's
/// assignment rule on the link sum to the bin's members (first bin wins
/// ties). Opens a new bin when no opened bin fits. Returns the bin index.
pub fn assign_best(sol: &mut PackingSolution, item: usize, problem: &Problem) -> usize {
    let (inst, stats) = (problem.instance(), problem.stats());
    let links = stats.links_of(item);
    let mut best: Option<(usize, f64)> = None;
    for (b, bin) in sol.bins().iter().enumerate() {
        if !fits(bin, item, inst) {
            continue;
        }
        let score: f64 = bin.items().iter().map(|&j| links[j]).sum();
        let better = match (best, problem.options().assign_rule) {
            (None, _) => true,
            (Some((_, s)), AssignRule::MinLink) => score < s,
            (Some((_, s)), AssignRule::MaxLink) => score > s,
        };
        if better {
            best = Some((b, score));
        }
    }
    match best {
        Some((b, _)) => {
            sol.add_to_bin(inst, b, item);
            b
        }
        None => sol.open_bin(inst, stats.open_type(item), item),
    }
}

/// Size range of the randomized candidate list: 3% to 5% of the items,
/// rounded up, at least one.
pub fn rcl_bounds(n: usize) -> (usize, usize) {
    let lo = (3 * n).div_ceil(100).max(1);
    let hi = (5 * n).div_ceil(100).max(1);
    (lo, hi)
}

/// Semi-greedy construction without post-processing.
///
/// While linked items remain unassigned, the candidate list takes up to `r`
/// of them in scan order (`order`, or index order), the one with the largest
/// aggregate neighbour weight opens a bin, and the bin is filled greedily
/// with the unassigned items most strongly linked to it. Leftovers go
/// through [`assign_best`].
pub fn semi_greedy_construct<R: Rng + ?Sized>(
    problem: &Problem,
    rng: &mut R,
    order: Option<&[usize]>,
) -> PackingSolution {
    let (inst, stats) = (problem.instance(), problem.stats());
    let n = inst.n();
    let scan: Vec<usize> = order.map_or_else(|| (0..n).collect(), <[usize]>::to_vec);
    let (lo, hi) = rcl_bounds(n);
    let rcl_size = rng.random_range(lo..=hi);
    let agg_penalty = stats.agg_penalty();
    let agg_weight = stats.agg_weight();

    let mut sol = PackingSolution::new();
    let mut assigned = vec![false; n];
    loop {
        let seed = scan
            .iter()
            .copied()
            .filter(|&i| !assigned[i] && agg_penalty[i] > 0.0)
            .take(rcl_size)
            .reduce(|best, i| if agg_weight[i] > agg_weight[best] { i } else { best });
        let Some(seed) = seed else { break };
        let b = sol.open_bin(inst, stats.open_type(seed), seed);
        assigned[seed] = true;
        let links = stats.links_of(seed);
        loop {
            let bin = &sol.bins()[b];
            let next = scan
                .iter()
                .copied()
                .filter(|&j| !assigned[j] && fits(bin, j, inst))
                .reduce(|best, j| if links[j] > links[best] { j } else { best });
            let Some(j) = next else { break };
            sol.add_to_bin(inst, b, j);
            assigned[j] = true;
        }
    }
    for &i in &scan {
        if !assigned[i] {
            assign_best(&mut sol, i, problem);
            assigned[i] = true;
        }
    }
    sol
}

/// A semi-greedy solution together with its key encoding.
#[derive(Clone, Debug)]
pub struct SemiGreedy {
    pub solution: PackingSolution,
    pub keys: RandomKeyVector,
}

/// Full semi-greedy start: construction in index order, post-processing,
/// relocation on every bin, then encoding.
pub fn semi_greedy<R: Rng + ?Sized>(problem: &Problem, rng: &mut R) -> SemiGreedy {
    let mut solution = semi_greedy_construct(problem, rng, None);
    post_process(&mut solution, problem);
    relocate_items(&mut solution, problem, 1.0, problem.options().t_max, rng);
    let keys = encode(&solution, 1.0);
    SemiGreedy { solution, keys }
}

/// Builds the packing selected by the key vector's strategy, before any
/// post-processing or local search.
pub fn construct<R: Rng + ?Sized>(rk: &RandomKeyVector, problem: &Problem, rng: &mut R) -> PackingSolution {
    let (inst, stats) = (problem.instance(), problem.stats());
    let cfg = decode_genes(rk);
    let order = sorted_item_order(rk);
    let sol = match cfg.strategy {
        Strategy::SemiGreedy => semi_greedy_construct(problem, rng, Some(&order)),
        Strategy::PreOpened | Strategy::Sequential => {
            let mut sol = PackingSolution::new();
            let mut assigned = vec![false; inst.n()];
            if cfg.strategy == Strategy::PreOpened && cfg.initial_bins > 0 {
                for &i in &order[..cfg.initial_bins] {
                    sol.open_bin(inst, stats.open_type(i), i);
                    assigned[i] = true;
                }
            }
            for &i in &order {
                if !assigned[i] && stats.agg_penalty()[i] > 0.0 {
                    assign_best(&mut sol, i, problem);
                    assigned[i] = true;
                }
            }
            for &i in &order {
                if !assigned[i] {
                    assign_best(&mut sol, i, problem);
                }
            }
            sol
        }
    };
    debug_assert!(sol.check(inst).is_ok());
    sol
}

/// Decodes a key vector: construction, post-processing, then item
/// relocation driven by the vector's relocation probability.
pub fn decode<R: Rng + ?Sized>(rk: &RandomKeyVector, problem: &Problem, rng: &mut R) -> PackingSolution {
    let cfg = decode_genes(rk);
    let mut sol = construct(rk, problem, rng);
    post_process(&mut sol, problem);
    relocate_items(&mut sol, problem, cfg.relocation_prob, problem.options().t_max, rng);
    sol
}

/// [`decode`] with a private generator seeded from `seed`.
pub fn decode_seeded(rk: &RandomKeyVector, problem: &Problem, seed: u64) -> PackingSolution {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    decode(rk, problem, &mut rng)
}

/// Encodes a packing: bin `j` of `k` gets the key block
/// `[j / (k + 1), (j + 1) / (k + 1))`, its items evenly spaced inside in
/// stored order. The genes select sequential assignment, no pre-opened bins
/// and relocation probability `relocation_prob`.
pub fn encode(sol: &PackingSolution, relocation_prob: f64) -> RandomKeyVector {
    let n: usize = sol.bins().iter().map(|b| b.len()).sum();
    let k = sol.num_bins();
    let width = 1.0 / (k as f64 + 1.0);
    let mut keys = vec![0.0; n + 3];
    for (j, bin) in sol.bins().iter().enumerate() {
        let slots = bin.len() as f64 + 1.0;
        for (t, &item) in bin.items().iter().enumerate() {
            keys[item] = (j as f64 + (t as f64 + 1.0) / slots) * width;
        }
    }
    keys[n] = 5.0 / 6.0;
    keys[n + 1] = 0.0;
    keys[n + 2] = relocation_prob.clamp(0.0, KEY_MAX);
    RandomKeyVector::from_clamped(keys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::tests::t1;
    use crate::instance::{generate_instance, CostShape, Instance};
    use crate::problem::ProblemOptions;
    use crate::solution::objective;

    fn rk(keys: &[f64]) -> RandomKeyVector {
        RandomKeyVector::new(keys.to_vec()).unwrap()
    }

    #[test]
    fn key_vector_validation() {
        assert_eq!(RandomKeyVector::new(vec![0.1; 3]), Err(KeyError::TooShort(3)));
        assert!(matches!(
            RandomKeyVector::new(vec![0.1, 0.2, 1.0, 0.3]),
            Err(KeyError::OutOfRange { index: 2, .. })
        ));
        assert!(RandomKeyVector::new(vec![0.0, 0.2, 0.999, 0.3]).is_ok());
    }

    #[test]
    fn gene_mapping() {
        let cfg = decode_genes(&rk(&[0.5, 0.0, 0.0, 0.0]));
        assert_eq!(cfg.strategy, Strategy::SemiGreedy);
        let mut keys = vec![0.5; 10];
        keys.extend([0.70, 0.45, 0.25]);
        let cfg = decode_genes(&rk(&keys));
        assert_eq!(cfg.strategy, Strategy::Sequential);
        assert_eq!(cfg.initial_bins, 4);
        assert_eq!(cfg.relocation_prob, 0.25);
        let cfg = decode_genes(&rk(&[0.5, 0.4, 0.0, 0.3]));
        assert_eq!(cfg.strategy, Strategy::PreOpened);
        assert_eq!(cfg.initial_bins, 0);
        assert_eq!(decode_genes(&rk(&[0.5, 0.999_999, 0.0, 0.3])).strategy, Strategy::Sequential);
    }

    #[test]
    fn item_order() {
        assert_eq!(sorted_item_order(&rk(&[0.9, 0.1, 0.5, 0.0, 0.0, 0.0])), vec![1, 2, 0]);
        assert_eq!(sorted_item_order(&rk(&[0.3; 7])), vec![0, 1, 2, 3]);
        assert_eq!(sorted_item_order(&rk(&[0.4, 0.3, 0.2, 0.1, 0.0, 0.0, 0.0])), vec![3, 2, 1, 0]);
    }

    #[test]
    fn assign_best_follows_rule() {
        // one roomy type, item 2 linked to item 0 (cost 1) and item 1 (cost 4)
        let inst = Instance::new(
            vec![vec![1.0]; 3],
            vec![5.0],
            vec![vec![10.0]],
            vec![vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 4.0], vec![1.0, 4.0, 0.0]],
        )
        .unwrap();
        for (rule, expected) in [(AssignRule::MaxLink, 1), (AssignRule::MinLink, 0)] {
            let p = Problem::new(
                inst.clone(),
                ProblemOptions {
                    assign_rule: rule,
                    ..Default::default()
                },
            );
            let mut sol = PackingSolution::from_groups(p.instance(), &[(0, vec![0]), (0, vec![1])]);
            assert_eq!(assign_best(&mut sol, 2, &p), expected);
        }
    }

    #[test]
    fn assign_best_on_fixture() {
        let p = Problem::with_defaults(t1());
        // only the large bin can take item 1 (3 + 4 <= 12, 5 + 4 > 6)
        let mut sol = PackingSolution::from_groups(p.instance(), &[(1, vec![0]), (0, vec![2])]);
        assert_eq!(assign_best(&mut sol, 1, &p), 0);
        // nothing fits: a new bin of the largest type is opened
        let mut sol = PackingSolution::from_groups(p.instance(), &[(0, vec![2])]);
        assert_eq!(assign_best(&mut sol, 1, &p), 1);
        assert_eq!(sol.bins()[1].type_id(), 1);
        let mut sol = PackingSolution::from_groups(p.instance(), &[(1, vec![2])]);
        assert_eq!(assign_best(&mut sol, 1, &p), 0);
    }

    #[test]
    fn rcl_bounds_round_up_with_floor_of_one() {
        assert_eq!(rcl_bounds(3), (1, 1));
        assert_eq!(rcl_bounds(25), (1, 2));
        assert_eq!(rcl_bounds(100), (3, 5));
        assert_eq!(rcl_bounds(200), (6, 10));
    }

    #[test]
    fn semi_greedy_on_fixture() {
        let p = Problem::with_defaults(t1());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sg = semi_greedy(&p, &mut rng);
        assert_eq!(objective(&sg.solution, &p).unwrap(), 14.0);
        assert_eq!(sg.keys.len(), 6);
        let mut rng2 = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(semi_greedy(&p, &mut rng2).solution, sg.solution);
    }

    #[test]
    fn semi_greedy_without_links_uses_best_bin_assignment() {
        let inst = Instance::new(
            vec![vec![2.0], vec![3.0], vec![4.0]],
            vec![4.0, 9.0],
            vec![vec![5.0], vec![10.0]],
            vec![vec![0.0; 3]; 3],
        )
        .unwrap();
        let p = Problem::with_defaults(inst);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sol = semi_greedy_construct(&p, &mut rng, None);
        assert_eq!(sol.num_bins(), 1);
        assert_eq!(sol.bins()[0].items(), &[0, 1, 2]);
    }

    #[test]
    fn sequential_strategy_on_fixture() {
        let p = Problem::with_defaults(t1());
        let keys = rk(&[0.1, 0.2, 0.3, 0.9, 0.0, 0.0]);
        assert_eq!(sorted_item_order(&keys), vec![0, 1, 2]);
        let sol = decode_seeded(&keys, &p, 0);
        assert_eq!(objective(&sol, &p).unwrap(), 14.0);
    }

    #[test]
    fn pre_opened_strategy_spreads_items_first() {
        let p = Problem::with_defaults(t1());
        let keys = rk(&[0.1, 0.2, 0.3, 0.5, 0.99, 0.0]);
        let cfg = decode_genes(&keys);
        assert_eq!((cfg.strategy, cfg.initial_bins), (Strategy::PreOpened, 2));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let raw = construct(&keys, &p, &mut rng);
        assert_eq!(raw.num_bins(), 2);
        assert_eq!(raw.bins()[0].items()[0], 0);
        assert_eq!(raw.bins()[1].items()[0], 1);
        assert_eq!(objective(&decode_seeded(&keys, &p, 0), &p).unwrap(), 14.0);
    }

    #[test]
    fn decode_is_deterministic_and_feasible() {
        let inst = generate_instance(20, 4, 2, CostShape::Mixed, 9);
        let p = Problem::with_defaults(inst);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let keys = RandomKeyVector::random(20, &mut rng);
            let a = decode_seeded(&keys, &p, 17);
            let b = decode_seeded(&keys, &p, 17);
            a.check(p.instance()).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.objective_value(&p), b.objective_value(&p));
        }
    }

    #[test]
    fn encode_builds_ascending_blocks() {
        let p = Problem::with_defaults(t1());
        let sol = PackingSolution::from_groups(p.instance(), &[(1, vec![2, 0]), (0, vec![1])]);
        let keys = encode(&sol, 0.3);
        assert_eq!(sorted_item_order(&keys), vec![2, 0, 1]);
        let k = keys.keys();
        assert!(k[2] < k[0] && k[0] < 1.0 / 3.0 && k[1] >= 1.0 / 3.0 && k[1] < 2.0 / 3.0);
        let cfg = decode_genes(&keys);
        assert_eq!(cfg.strategy, Strategy::Sequential);
        assert_eq!(cfg.initial_bins, 0);
        assert_eq!(cfg.relocation_prob, 0.3);

        let single = PackingSolution::from_groups(p.instance(), &[(1, vec![0, 1, 2])]);
        let redecoded = decode_seeded(&encode(&single, 0.0), &p, 1);
        assert_eq!(objective(&redecoded, &p).unwrap(), 14.0);
    }

    #[test]
    fn decode_key_ignores_irrelevant_genes() {
        let a = rk(&[0.1, 0.2, 0.3, 0.9, 0.1, 0.5]);
        let b = rk(&[0.15, 0.25, 0.35, 0.95, 0.7, 0.5]);
        assert_eq!(decode_key(&a), decode_key(&b));
        let c = rk(&[0.1, 0.2, 0.3, 0.5, 0.7, 0.5]);
        assert_ne!(decode_key(&a), decode_key(&c));
    }
}
