//! Exhaustive search for small instances.
//!
//! Every set partition of the items is enumerated; each block takes the
//! cheapest bin type it fits. Used as ground truth in tests and from the
//! command line.

use thiserror::Error;

use crate::problem::Problem;
use crate::solution::{Bin, PackingSolution};

/// Largest instance the enumeration accepts.
pub const MAX_ITEMS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("exhaustive search supports at most {max} items, instance has {n}")]
    TooLarge { n: usize, max: usize },
}

#[derive(Clone, Debug)]
pub struct Optimum {
    pub solution: PackingSolution,
    pub objective: f64,
    /// Partitions whose blocks all fit some bin type.
    pub feasible_partitions: u64,
}

struct Blocks {
    /// Cheapest fitting type per item subset, `None` if no type fits.
    cheapest: Vec<Option<(usize, f64)>>,
    /// Link cost kept inside each subset, summed over unordered pairs.
    inside: Vec<f64>,
}

fn blocks(problem: &Problem) -> Blocks {
    let inst = problem.instance();
    let (n, m, d) = (inst.n(), inst.m(), inst.d());
    let size = 1usize << n;
    let mut cheapest = vec![None; size];
    let mut inside = vec![0.0; size];
    let mut load = vec![0.0; d];
    for mask in 1..size {
        let top = usize::BITS as usize - 1 - mask.leading_zeros() as usize;
        let rest = mask & !(1 << top);
        inside[mask] = inside[rest]
            + (0..top)
                .filter(|&i| rest & (1 << i) != 0)
                .map(|i| inst.pair_cost(i, top))
                .sum::<f64>();
        load.iter_mut().for_each(|l| *l = 0.0);
        for i in (0..n).filter(|&i| mask & (1 << i) != 0) {
            for (l, w) in load.iter_mut().zip(inst.weights_of(i)) {
                *l += w;
            }
        }
        cheapest[mask] = (0..m)
            .filter(|&ty| load.iter().zip(inst.capacities(ty)).all(|(l, c)| l <= c))
            .map(|ty| (ty, inst.type_cost(ty)))
            .fold(None, |best: Option<(usize, f64)>, cand| match best {
                Some(b) if b.1 <= cand.1 => Some(b),
                _ => Some(cand),
            });
    }
    Blocks { cheapest, inside }
}

struct Enumeration<'a> {
    problem: &'a Problem,
    blocks: Blocks,
    total_links: f64,
    parts: Vec<usize>,
    best: Option<(f64, PackingSolution)>,
    feasible: u64,
}

impl Enumeration<'_> {
    fn visit(&mut self, item: usize) {
        let n = self.problem.n();
        if item == n {
            self.leaf();
            return;
        }
        for b in 0..self.parts.len() {
            self.parts[b] |= 1 << item;
            self.visit(item + 1);
            self.parts[b] &= !(1 << item);
        }
        self.parts.push(1 << item);
        self.visit(item + 1);
        self.parts.pop();
    }

    fn leaf(&mut self) {
        let mut bin_cost = 0.0;
        let mut kept = 0.0;
        for &mask in &self.parts {
            match self.blocks.cheapest[mask] {
                Some((_, c)) => bin_cost += c,
                None => return,
            }
            kept += self.blocks.inside[mask];
        }
        self.feasible += 1;
        let counting = self.problem.options().pair_counting;
        let value = bin_cost + counting.pair_penalty(self.total_links - kept);
        if let Some((best, incumbent)) = &self.best {
            if value > *best {
                return;
            }
            let candidate = self.solution();
            if value < *best
                || candidate.evaluate(self.problem).cmp_quality(&incumbent.evaluate(self.problem)).is_lt()
            {
                self.best = Some((value, candidate));
            }
        } else {
            self.best = Some((value, self.solution()));
        }
    }

    fn solution(&self) -> PackingSolution {
        let inst = self.problem.instance();
        let bins = self
            .parts
            .iter()
            .map(|&mask| {
                let (ty, _) = self.blocks.cheapest[mask].expect("feasible block");
                let items = (0..inst.n()).filter(|&i| mask & (1 << i) != 0).collect();
                Bin::with_items(inst, ty, items)
            })
            .collect();
        PackingSolution::from_bins(bins)
    }
}

/// Finds an optimal packing by enumerating all set partitions. Among
/// optimal packings the one preferred by the tie-breakers is returned.
pub fn brute_force(problem: &Problem) -> Result<Optimum, OracleError> {
    let inst = problem.instance();
    let n = inst.n();
    if n > MAX_ITEMS {
        return Err(OracleError::TooLarge { n, max: MAX_ITEMS });
    }
    let blocks = blocks(problem);
    let total_links = blocks.inside[(1 << n) - 1];
    let mut search = Enumeration {
        problem,
        blocks,
        total_links,
        parts: Vec::with_capacity(n),
        best: None,
        feasible: 0,
    };
    search.visit(0);
    let (objective, solution) = search.best.expect("singleton partition always fits");
    Ok(Optimum {
        solution,
        objective,
        feasible_partitions: search.feasible,
    })
}
