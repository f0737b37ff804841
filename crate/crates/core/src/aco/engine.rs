use std::collections::HashMap;

use rand_chacha::ChaCha8Rng;

use super::archive::{Archive, ArchiveEntry};
use super::cache::DecodeCache;
use super::nelder_mead::{nelder_mead, NelderMeadConfig};
use super::sampling::{sample_ant, SamplingConfig};
use crate::decode::{decode_key, decode_seeded, semi_greedy, RandomKeyVector};
use crate::par::Exec;
use crate::problem::Problem;
use crate::qlearn::{reward, AcoParams, ParamSpace, QLearner, QlConfig};
use crate::solution::{Evaluation, PackingSolution};

/// Seed of the generator a key vector is decoded with. It depends only on
/// the run seed and the decode key, so equal keys always decode alike.
pub fn decode_seed(base: u64, decode_key: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in decode_key.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = h ^ base.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Clone, Debug)]
pub struct EngineConfig {
    pub sampling: SamplingConfig,
    pub nelder_mead: NelderMeadConfig,
    /// Decode cache capacity; `None` disables caching.
    pub cache_capacity: Option<usize>,
    /// Run-level seed mixed into every decode seed.
    pub decode_base_seed: u64,
    pub exec: Exec,
    pub space: ParamSpace,
    pub ql: QlConfig,
}

impl EngineConfig {
    pub fn new(space: ParamSpace) -> Self {
        EngineConfig {
            sampling: SamplingConfig::default(),
            nelder_mead: NelderMeadConfig::default(),
            cache_capacity: Some(super::cache::Q_MAX),
            decode_base_seed: 0,
            exec: Exec::default(),
            space,
            ql: QlConfig::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct InitReport {
    /// The semi-greedy packing the archive was anchored with.
    pub semi_greedy: PackingSolution,
    pub semi_greedy_keys: RandomKeyVector,
    pub semi_greedy_eval: Evaluation,
    pub best: ArchiveEntry,
    pub params: AcoParams,
}

#[derive(Clone, Debug)]
pub struct GenerationReport {
    pub generation: u64,
    /// Parameters the generation ran with.
    pub params: AcoParams,
    pub best: ArchiveEntry,
    /// Whether the archive best got strictly better.
    pub improved: bool,
    pub reward: f64,
    /// Decodes actually performed (cache misses).
    pub decodes: usize,
    pub hit_rate: f64,
}

/// One worker's ACO state: archive, decode cache, parameter learner and
/// generator.
pub struct Engine<'p> {
    problem: &'p Problem,
    cfg: EngineConfig,
    rng: ChaCha8Rng,
    archive: Archive,
    cache: Option<DecodeCache>,
    tuner: QLearner,
    params: AcoParams,
    generation: u64,
    decodes: u64,
}

impl<'p> Engine<'p> {
    pub fn new(problem: &'p Problem, cfg: EngineConfig, rng: ChaCha8Rng) -> Self {
        let tuner = QLearner::new(cfg.space.clone(), cfg.ql);
        let params = tuner.params();
        Engine {
            problem,
            archive: Archive::new(params.archive_size),
            cache: cfg.cache_capacity.map(DecodeCache::new),
            tuner,
            params,
            cfg,
            rng,
            generation: 0,
            decodes: 0,
        }
    }

    pub fn archive(&self) -> &Archive {
        &self.archive
    }

    pub fn params(&self) -> AcoParams {
        self.params
    }

    pub fn tuner(&self) -> &QLearner {
        &self.tuner
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    /// Total decodes performed so far.
    pub fn decodes(&self) -> u64 {
        self.decodes
    }

    pub fn hit_rate(&self) -> f64 {
        self.cache.as_ref().map_or(0.0, DecodeCache::hit_rate)
    }

    /// Feeds the elapsed budget fraction to the exploration schedule.
    pub fn set_progress(&mut self, progress: f64) {
        self.tuner.set_progress(progress);
    }

    /// Decodes `keys` exactly as the engine's evaluations do.
    pub fn decode(&self, keys: &RandomKeyVector) -> PackingSolution {
        decode_seeded(keys, self.problem, decode_seed(self.cfg.decode_base_seed, &decode_key(keys)))
    }

    /// Evaluates a batch through the cache; misses are decoded with the
    /// configured executor. Returns decode keys and evaluations in order.
    pub fn evaluate(&mut self, keys: &[RandomKeyVector]) -> Vec<(String, Evaluation)> {
        let dkeys: Vec<String> = keys.iter().map(decode_key).collect();
        let mut found: Vec<Option<Evaluation>> = vec![None; keys.len()];
        let mut pending: Vec<usize> = Vec::new();
        let mut first_of: HashMap<&str, usize> = HashMap::new();
        let mut alias: Vec<(usize, usize)> = Vec::new();
        for (idx, dk) in dkeys.iter().enumerate() {
            if let Some(cache) = self.cache.as_mut() {
                if let Some(&first) = first_of.get(dk.as_str()) {
                    alias.push((idx, first));
                    continue;
                }
                if let Some(v) = cache.get(dk) {
                    found[idx] = Some(v);
                    continue;
                }
                first_of.insert(dk, idx);
            }
            pending.push(idx);
        }

        let (problem, base) = (self.problem, self.cfg.decode_base_seed);
        let computed = self.cfg.exec.map(&pending, |&idx| {
            decode_seeded(&keys[idx], problem, decode_seed(base, &dkeys[idx])).evaluate(problem)
        });
        self.decodes += pending.len() as u64;
        for (&idx, v) in pending.iter().zip(computed) {
            found[idx] = Some(v);
            if let Some(cache) = self.cache.as_mut() {
                cache.insert(dkeys[idx].clone(), v);
            }
        }
        for (idx, first) in alias {
            found[idx] = found[first];
        }
        dkeys
            .into_iter()
            .zip(found)
            .map(|(dk, v)| (dk, v.expect("every key evaluated")))
            .collect()
    }

    /// (Re)starts the search: fresh learner state, an empty cache and an
    /// archive holding one semi-greedy vector plus random ones up to the
    /// archive size.
    pub fn initialize(&mut self) -> InitReport {
        self.params = self.tuner.init(&mut self.rng);
        self.archive = Archive::new(self.params.archive_size);
        self.generation = 0;
        if let Some(cache) = self.cache.as_mut() {
            cache.clear();
        }

        let sg = semi_greedy(self.problem, &mut self.rng);
        let n = self.problem.n();
        let mut keys = vec![sg.keys.clone()];
        keys.extend((1..self.params.archive_size).map(|_| RandomKeyVector::random(n, &mut self.rng)));
        let evals = self.evaluate(&keys);
        let newcomers = keys
            .into_iter()
            .zip(evals)
            .map(|(k, (dk, v))| (k, v, dk))
            .collect();
        self.archive.update(newcomers);
        self.fill_archive();

        InitReport {
            semi_greedy_eval: sg.solution.evaluate(self.problem),
            semi_greedy: sg.solution,
            semi_greedy_keys: sg.keys,
            best: self.best().clone(),
            params: self.params,
        }
    }

    fn best(&self) -> &ArchiveEntry {
        self.archive.best().expect("initialized archive")
    }

    /// Tops the archive up with random vectors until it reaches capacity.
    /// Gives up after a bounded number of draws that only hit known keys.
    fn fill_archive(&mut self) {
        let n = self.problem.n();
        let mut stale = 0;
        while self.archive.len() < self.archive.capacity() && stale < 8 {
            let missing = self.archive.capacity() - self.archive.len();
            let keys: Vec<RandomKeyVector> =
                (0..missing).map(|_| RandomKeyVector::random(n, &mut self.rng)).collect();
            let evals = self.evaluate(&keys);
            let admitted = self
                .archive
                .update(keys.into_iter().zip(evals).map(|(k, (dk, v))| (k, v, dk)).collect());
            if admitted == 0 {
                stale += 1;
            }
        }
    }

    /// One generation: sample and evaluate ants, refine the best ant with
    /// Nelder-Mead, update the archive, then let the learner pick the
    /// parameters of the next generation.
    pub fn run_generation(&mut self) -> GenerationReport {
        let params = self.params;
        let before = self.best().eval;
        let decodes_before = self.decodes;

        let ants: Vec<RandomKeyVector> = (0..params.ants)
            .map(|_| sample_ant(&self.archive, params.q, params.xi, &self.cfg.sampling, &mut self.rng))
            .collect();
        let evals = self.evaluate(&ants);
        let lead = (0..ants.len())
            .min_by(|&a, &b| evals[a].1.cmp_quality(&evals[b].1))
            .expect("at least one ant");

        let nm_cfg = self.cfg.nelder_mead;
        let refined = nelder_mead(&ants[lead], evals[lead].1.objective, &nm_cfg, |batch| {
            self.evaluate(batch).into_iter().map(|(_, v)| v.objective).collect()
        });

        let mut newcomers: Vec<(RandomKeyVector, Evaluation, String)> = ants
            .into_iter()
            .zip(evals)
            .map(|(k, (dk, v))| (k, v, dk))
            .collect();
        if refined.value < newcomers[lead].1.objective {
            let (dk, v) = self.evaluate(std::slice::from_ref(&refined.keys)).remove(0);
            newcomers.push((refined.keys, v, dk));
        }
        self.archive.update(newcomers);

        let after = self.best().clone();
        let improved = after.eval.cmp_quality(&before).is_lt();
        let r = reward(before.objective, after.eval.objective);
        self.generation += 1;

        self.params = self.tuner.step(r, &mut self.rng);
        if self.params.archive_size != self.archive.capacity() {
            self.archive.set_capacity(self.params.archive_size);
            self.fill_archive();
        }

        GenerationReport {
            generation: self.generation,
            params,
            best: after,
            improved,
            reward: r,
            decodes: (self.decodes - decodes_before) as usize,
            hit_rate: self.hit_rate(),
        }
    }
}
