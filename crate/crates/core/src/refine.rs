//! Improvement steps applied to every constructed packing: bin-type
//! downgrades, pairwise bin merging and first-improvement item relocation.

use rand::Rng;

use crate::instance::{Instance, LinkStats};
use crate::problem::Problem;
use crate::solution::{fits, Bin, PackingSolution};

/// A single item relocation with its exact objective change.
///
/// Both touched bins are downgraded to the cheapest type that still holds
/// their new load; `from_type_after` is `None` when the source bin empties.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MoveDelta {
    pub item: usize,
    pub from_bin: usize,
    pub to_bin: usize,
    pub from_type_after: Option<usize>,
    pub to_type_after: usize,
    pub delta_objective: f64,
}

/// Cheapest type strictly cheaper than `current` that holds `load`, or
/// `current` when there is none.
pub fn reduced_type(inst: &Instance, stats: &LinkStats, load: &[f64], current: usize) -> usize {
    let current_cost = inst.type_cost(current);
    stats
        .cost_order()
        .iter()
        .copied()
        .take_while(|&t| inst.type_cost(t) < current_cost)
        .find(|&t| inst.load_fits(load, t))
        .unwrap_or(current)
}

/// Downgrades every bin to the cheapest type that still fits its load.
/// Returns whether any bin changed.
pub fn replace_bin_types(sol: &mut PackingSolution, problem: &Problem) -> bool {
    let (inst, stats) = (problem.instance(), problem.stats());
    let targets: Vec<usize> = sol
        .bins()
        .iter()
        .map(|b| reduced_type(inst, stats, b.load(), b.type_id()))
        .collect();
    if targets.iter().zip(sol.bins()).all(|(&t, b)| t == b.type_id()) {
        return false;
    }
    for (bin, t) in sol.bins_mut().iter_mut().zip(targets) {
        bin.set_type(t);
    }
    true
}

/// One merging pass over all bin pairs in creation order.
///
/// A pair is merged into a new bin of the cheapest type that holds both loads
/// and costs no more than the two bins together. Each bin takes part in at
/// most one merge per pass; merged bins are appended after the survivors.
/// Returns whether any merge happened.
pub fn merge_bins(sol: &mut PackingSolution, problem: &Problem) -> bool {
    let (inst, stats) = (problem.instance(), problem.stats());
    let bins = sol.bins();
    let len = bins.len();
    let mut merged = vec![false; len];
    let mut created = Vec::new();
    let mut union = vec![0.0; inst.d()];
    for a in 0..len {
        if merged[a] {
            continue;
        }
        for b in 0..len {
            if b == a || merged[b] {
                continue;
            }
            let budget = inst.type_cost(bins[a].type_id()) + inst.type_cost(bins[b].type_id());
            for (u, (x, y)) in union.iter_mut().zip(bins[a].load().iter().zip(bins[b].load())) {
                *u = x + y;
            }
            let target = stats
                .cost_order()
                .iter()
                .copied()
                .take_while(|&t| inst.type_cost(t) <= budget)
                .find(|&t| inst.load_fits(&union, t));
            if let Some(t) = target {
                let items = bins[a].items().iter().chain(bins[b].items()).copied().collect();
                created.push(Bin::with_items(inst, t, items));
                merged[a] = true;
                merged[b] = true;
                break;
            }
        }
    }
    if created.is_empty() {
        return false;
    }
    let mut kept: Vec<Bin> = sol
        .bins()
        .iter()
        .zip(&merged)
        .filter(|(_, &m)| !m)
        .map(|(b, _)| b.clone())
        .collect();
    kept.extend(created);
    *sol.bins_mut() = kept;
    true
}

/// Type replacement followed by merging, repeated until a pass changes
/// nothing. Returns the number of passes that changed the packing.
pub fn post_process(sol: &mut PackingSolution, problem: &Problem) -> usize {
    let mut changed_passes = 0;
    loop {
        let replaced = replace_bin_types(sol, problem);
        let merged = merge_bins(sol, problem);
        if !replaced && !merged {
            return changed_passes;
        }
        changed_passes += 1;
    }
}

/// Objective change of moving `item` from bin `from` to bin `to`, or `None`
/// when the item does not fit the destination's current type.
pub fn relocation_delta(
    sol: &PackingSolution,
    problem: &Problem,
    item: usize,
    from: usize,
    to: usize,
) -> Option<MoveDelta> {
    let (inst, stats) = (problem.instance(), problem.stats());
    let src = &sol.bins()[from];
    let dst = &sol.bins()[to];
    debug_assert!(src.contains(item) && from != to);
    if !fits(dst, item, inst) {
        return None;
    }
    let w = inst.weights_of(item);
    let from_type_after = if src.len() == 1 {
        None
    } else {
        let mut load = vec![0.0; inst.d()];
        for &s in src.items().iter().filter(|&&s| s != item) {
            for (l, x) in load.iter_mut().zip(inst.weights_of(s)) {
                *l += x;
            }
        }
        Some(reduced_type(inst, stats, &load, src.type_id()))
    };
    let dst_load: Vec<f64> = dst.load().iter().zip(w).map(|(l, x)| l + x).collect();
    let to_type_after = reduced_type(inst, stats, &dst_load, dst.type_id());

    let bins_delta = from_type_after.map_or(0.0, |t| inst.type_cost(t))
        - inst.type_cost(src.type_id())
        + inst.type_cost(to_type_after)
        - inst.type_cost(dst.type_id());
    // separated from the old bin-mates, reunited with the new ones
    let sep_delta = problem
        .options()
        .pair_counting
        .pair_penalty(src.pair_sum(inst, item) - dst.pair_sum(inst, item));
    Some(MoveDelta {
        item,
        from_bin: from,
        to_bin: to,
        from_type_after,
        to_type_after,
        delta_objective: bins_delta + sep_delta,
    })
}

/// Applies a move computed by [`relocation_delta`]. An emptied source bin
/// is removed, shifting later bin indices down by one.
pub fn apply_move(sol: &mut PackingSolution, problem: &Problem, mv: &MoveDelta) {
    let inst = problem.instance();
    let bins = sol.bins_mut();
    bins[mv.to_bin].push(inst, mv.item);
    bins[mv.to_bin].set_type(mv.to_type_after);
    bins[mv.from_bin].remove(inst, mv.item);
    match mv.from_type_after {
        Some(t) => bins[mv.from_bin].set_type(t),
        None => {
            bins.remove(mv.from_bin);
        }
    }
}

/// First-improvement item relocation.
///
/// Each iteration samples every bin with probability `p`; items of sampled
/// bins become candidates, ordered by descending aggregate neighbour weight,
/// then descending bin cost, then ascending bin size. The first strictly
/// improving move is applied. Stops when an iteration finds no improvement
/// or after `t_max` iterations, then runs one merging pass.
pub fn relocate_items<R: Rng + ?Sized>(
    sol: &mut PackingSolution,
    problem: &Problem,
    p: f64,
    t_max: usize,
    rng: &mut R,
) {
    let (inst, stats) = (problem.instance(), problem.stats());
    let agg_weight = stats.agg_weight();
    for _ in 0..t_max {
        let mut candidates: Vec<(usize, usize)> = Vec::new();
        for (b, bin) in sol.bins().iter().enumerate() {
            let r: f64 = rng.random();
            if r < p {
                candidates.extend(bin.items().iter().map(|&i| (i, b)));
            }
        }
        let bins = sol.bins();
        candidates.sort_by(|&(i, a), &(j, b)| {
            agg_weight[j]
                .total_cmp(&agg_weight[i])
                .then(inst.type_cost(bins[b].type_id()).total_cmp(&inst.type_cost(bins[a].type_id())))
                .then(bins[a].len().cmp(&bins[b].len()))
        });

        let accepted = candidates.iter().find_map(|&(item, from)| {
            (0..bins.len())
                .filter(|&to| to != from)
                .filter_map(|to| relocation_delta(sol, problem, item, from, to))
                .find(|mv| mv.delta_objective < 0.0)
        });
        match accepted {
            Some(mv) => apply_move(sol, problem, &mv),
            None => break,
        }
    }
    merge_bins(sol, problem);
}
