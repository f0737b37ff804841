#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rkaco::{generate_instance, CostShape, Instance, PackingSolution};

/// A packing built by random choices: each item joins a random bin it fits
/// or opens a bin of a random type it fits.
pub fn random_packing<R: Rng>(inst: &Instance, rng: &mut R) -> PackingSolution {
    let mut order: Vec<usize> = (0..inst.n()).collect();
    order.shuffle(rng);
    let mut groups: Vec<(usize, Vec<usize>, Vec<f64>)> = Vec::new();
    for i in order {
        let w = inst.weights_of(i);
        let open: Vec<usize> = (0..groups.len())
            .filter(|&g| {
                let (ty, _, load) = &groups[g];
                load.iter().zip(w).zip(inst.capacities(*ty)).all(|((l, x), c)| l + x <= *c)
            })
            .collect();
        if !open.is_empty() && rng.random_bool(0.6) {
            let g = open[rng.random_range(0..open.len())];
            groups[g].1.push(i);
            groups[g].2.iter_mut().zip(w).for_each(|(l, x)| *l += x);
        } else {
            let types: Vec<usize> = (0..inst.m()).filter(|&t| inst.item_fits_type(i, t)).collect();
            let ty = types[rng.random_range(0..types.len())];
            groups.push((ty, vec![i], w.to_vec()));
        }
    }
    let groups: Vec<(usize, Vec<usize>)> = groups.into_iter().map(|(t, items, _)| (t, items)).collect();
    PackingSolution::from_groups(inst, &groups)
}

/// Generated instances cycling through the cost shapes, with `n`, `m` and
/// `d` drawn from the given ranges.
pub fn instance_mix<R: Rng>(
    count: usize,
    n: std::ops::RangeInclusive<usize>,
    m: std::ops::RangeInclusive<usize>,
    d: std::ops::RangeInclusive<usize>,
    rng: &mut R,
) -> Vec<Instance> {
    (0..count)
        .map(|k| {
            let shape = CostShape::ALL[k % CostShape::ALL.len()];
            generate_instance(
                rng.random_range(n.clone()),
                rng.random_range(m.clone()),
                rng.random_range(d.clone()),
                shape,
                rng.random(),
            )
        })
        .collect()
}
