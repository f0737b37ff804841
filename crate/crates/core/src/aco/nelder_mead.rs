use crate::decode::{RandomKeyVector, KEY_MAX};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NelderMeadConfig {
    /// Objective evaluations allowed, the start point included.
    pub budget: usize,
    /// Offset of the initial simplex vertices along each axis, wrapped
    /// into `[0, 1)`.
    pub step: f64,
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Stops once every vertex lies this close (max norm) to the best one.
    pub min_diameter: f64,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        NelderMeadConfig {
            budget: 100,
            step: 0.05,
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            min_diameter: 1e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NelderMeadResult {
    pub keys: RandomKeyVector,
    pub value: f64,
    pub evaluations: usize,
}

struct Search<F> {
    eval: F,
    used: usize,
    budget: usize,
    best: (Vec<f64>, f64),
}

impl<F: FnMut(&[RandomKeyVector]) -> Vec<f64>> Search<F> {
    fn left(&self) -> usize {
        self.budget.saturating_sub(self.used)
    }

    fn batch(&mut self, points: Vec<Vec<f64>>) -> Vec<(Vec<f64>, f64)> {
        let keys: Vec<RandomKeyVector> = points.into_iter().map(RandomKeyVector::from_clamped).collect();
        let values = (self.eval)(&keys);
        self.used += keys.len();
        keys.into_iter()
            .zip(values)
            .map(|(k, v)| {
                let x = k.into_inner();
                if v < self.best.1 {
                    self.best = (x.clone(), v);
                }
                (x, v)
            })
            .collect()
    }

    fn one(&mut self, point: Vec<f64>) -> (Vec<f64>, f64) {
        self.batch(vec![point]).pop().expect("one evaluation")
    }
}

fn toward(from: &[f64], to: &[f64], t: f64) -> Vec<f64> {
    from.iter().zip(to).map(|(a, b)| (a + t * (b - a)).clamp(0.0, KEY_MAX)).collect()
}

/// Minimizes `eval` over the key box with the Nelder-Mead simplex method,
/// starting from `start` whose value is `start_value`.
///
/// `eval` receives batches of points (initial simplex and shrink steps come
/// as one batch) and returns their values in order. Returns the best point
/// seen; with a budget below two it is `start` itself.
pub fn nelder_mead<F>(
    start: &RandomKeyVector,
    start_value: f64,
    cfg: &NelderMeadConfig,
    eval: F,
) -> NelderMeadResult
where
    F: FnMut(&[RandomKeyVector]) -> Vec<f64>,
{
    let dim = start.len();
    let x0 = start.keys().to_vec();
    let mut s = Search {
        eval,
        used: 1,
        budget: cfg.budget,
        best: (x0.clone(), start_value),
    };

    let axes = dim.min(s.left());
    if axes > 0 {
        let points = (0..axes)
            .map(|i| {
                let mut v = x0.clone();
                v[i] = (v[i] + cfg.step).rem_euclid(1.0);
                v
            })
            .collect();
        let mut simplex = vec![(x0, start_value)];
        simplex.extend(s.batch(points));
        if axes == dim {
            iterate(&mut s, &mut simplex, cfg);
        }
    }

    let (keys, value) = s.best;
    NelderMeadResult {
        keys: RandomKeyVector::from_clamped(keys),
        value,
        evaluations: s.used,
    }
}

fn iterate<F>(s: &mut Search<F>, simplex: &mut [(Vec<f64>, f64)], cfg: &NelderMeadConfig)
where
    F: FnMut(&[RandomKeyVector]) -> Vec<f64>,
{
    let dim = simplex.len() - 1;
    while s.left() > 0 {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let diameter = simplex[1..]
            .iter()
            .flat_map(|(v, _)| v.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if diameter < cfg.min_diameter {
            break;
        }

        let mut centroid = vec![0.0; dim];
        for (v, _) in &simplex[..dim] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / dim as f64;
            }
        }
        let (f_best, f_second, f_worst) = (simplex[0].1, simplex[dim - 1].1, simplex[dim].1);
        let worst = simplex[dim].0.clone();

        let reflected = s.one(toward(&centroid, &worst, -cfg.reflection));
        if reflected.1 < f_best {
            if s.left() > 0 {
                let expanded = s.one(toward(&centroid, &reflected.0, cfg.expansion));
                simplex[dim] = if expanded.1 < reflected.1 { expanded } else { reflected };
            } else {
                simplex[dim] = reflected;
            }
            continue;
        }
        if reflected.1 < f_second {
            simplex[dim] = reflected;
            continue;
        }
        if s.left() == 0 {
            break;
        }
        let outside = reflected.1 < f_worst;
        let target = if outside { &reflected.0 } else { &worst };
        let contracted = s.one(toward(&centroid, target, cfg.contraction));
        let bound = if outside { reflected.1 } else { f_worst };
        if contracted.1 < bound || (outside && contracted.1 <= bound) {
            simplex[dim] = contracted;
            continue;
        }

        let take = dim.min(s.left());
        let anchor = simplex[0].0.clone();
        let points = simplex[1..=take]
            .iter()
            .map(|(v, _)| toward(&anchor, v, cfg.shrink))
            .collect();
        for (slot, shrunk) in simplex[1..=take].iter_mut().zip(s.batch(points)) {
            *slot = shrunk;
        }
    }
}
