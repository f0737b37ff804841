use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::archive::Archive;
use crate::decode::{RandomKeyVector, KEY_MAX};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplingConfig {
    /// Spreads at or below this are treated as zero dispersion.
    pub eps: f64,
    /// Spread used for zero dispersion and single-member archives.
    pub default_sigma: f64,
    /// Redraws per coordinate before the value is clamped into range.
    pub max_redraws: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            eps: 1e-6,
            default_sigma: 0.9999,
            max_redraws: 100,
        }
    }
}

/// Gaussian rank weights `w_l = exp(-(l-1)^2 / (2 q^2 k^2)) / (q k sqrt(2 pi))`
/// for ranks `l = 1..=k`.
pub fn rank_weights(k: usize, q: f64) -> Vec<f64> {
    let qk = q * k as f64;
    let scale = 1.0 / (qk * (2.0 * PI).sqrt());
    let denom = 2.0 * qk * qk;
    (0..k)
        .map(|l| {
            let r = l as f64;
            scale * (-(r * r) / denom).exp()
        })
        .collect()
}

/// Normalizes weights into selection probabilities.
pub fn selection_probs(weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    weights.iter().map(|w| w / total).collect()
}

/// Sampling spread of coordinate `dim` around archive member `rank`:
/// `xi` times the mean absolute distance to the other members.
pub fn sigma(archive: &Archive, rank: usize, dim: usize, xi: f64, cfg: &SamplingConfig) -> f64 {
    let entries = archive.entries();
    let k = entries.len();
    if k <= 1 {
        return cfg.default_sigma;
    }
    let center = entries[rank].keys.keys()[dim];
    let spread: f64 = entries
        .iter()
        .enumerate()
        .filter(|&(e, _)| e != rank)
        .map(|(_, entry)| (entry.keys.keys()[dim] - center).abs())
        .sum();
    let s = xi * spread / (k - 1) as f64;
    if s <= cfg.eps {
        cfg.default_sigma
    } else {
        s
    }
}

fn pick_rank<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (l, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return l;
        }
    }
    // rounding left a sliver above the last cumulative sum
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Samples one ant around an archive member chosen by rank weight.
///
/// Coordinates are redrawn while they fall outside `[0, 1)`; after
/// `max_redraws` failures the last draw is clamped into range.
pub fn sample_ant<R: Rng + ?Sized>(
    archive: &Archive,
    q: f64,
    xi: f64,
    cfg: &SamplingConfig,
    rng: &mut R,
) -> RandomKeyVector {
    assert!(!archive.is_empty(), "sampling needs a non-empty archive");
    let probs = selection_probs(&rank_weights(archive.len(), q));
    let rank = pick_rank(&probs, rng);
    let center = archive.entries()[rank].keys.keys();
    let keys = (0..center.len())
        .map(|dim| {
            let mu = center[dim];
            let sd = sigma(archive, rank, dim, xi, cfg);
            let normal = match Normal::new(mu, sd) {
                Ok(n) if sd > 0.0 => n,
                _ => return mu,
            };
            let mut x = normal.sample(rng);
            for _ in 0..cfg.max_redraws {
                if (0.0..1.0).contains(&x) {
                    return x;
                }
                x = normal.sample(rng);
            }
            x.clamp(0.0, KEY_MAX)
        })
        .collect();
    RandomKeyVector::from_clamped(keys)
}
