//! Multi-worker runs with a shared elite pool and a single restart.
//!
//! Every worker drives its own ACO engine with its own generator stream.
//! Improvements go to a shared pool of distinct elite key vectors and to an
//! all-time best register that survives the restart.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::aco::{ArchiveEntry, Engine, EngineConfig, NelderMeadConfig, SamplingConfig, Q_MAX};
use crate::decode::RandomKeyVector;
use crate::par::Exec;
use crate::problem::Problem;
use crate::qlearn::{ParamSpace, QlConfig};
use crate::solution::{Evaluation, PackingSolution};

/// When a run ends.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Budget {
    /// Wall-clock limit.
    Time(Duration),
    /// Generations per worker; makes single-worker runs reproducible.
    Generations(u64),
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub budget: Budget,
    pub workers: usize,
    pub seed: u64,
    pub pool_size: usize,
    /// Budget fraction at which the single restart happens; values of 1 or
    /// more disable it.
    pub restart_fraction: f64,
    pub cache: bool,
    pub cache_capacity: usize,
    pub nelder_mead: NelderMeadConfig,
    pub sampling: SamplingConfig,
    pub ql: QlConfig,
    /// Parameter grid; `None` picks the default for the instance size.
    pub space: Option<ParamSpace>,
    /// Stop as soon as the best objective reaches this value.
    pub target: Option<f64>,
    pub exec: Exec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            budget: Budget::Time(Duration::from_secs(10)),
            workers: 1,
            seed: 0,
            pool_size: 10,
            restart_fraction: 0.5,
            cache: true,
            cache_capacity: Q_MAX,
            nelder_mead: NelderMeadConfig::default(),
            sampling: SamplingConfig::default(),
            ql: QlConfig::default(),
            space: None,
            target: None,
            exec: Exec::default(),
        }
    }
}

impl RunConfig {
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), String> {
        match self.budget {
            Budget::Time(t) if t.is_zero() => return Err("time limit must be positive".into()),
            Budget::Generations(0) => return Err("generation budget must be positive".into()),
            _ => {}
        }
        if self.workers == 0 {
            return Err("at least one worker is required".into());
        }
        if self.pool_size == 0 {
            return Err("pool size must be positive".into());
        }
        if !(self.restart_fraction > 0.0) {
            return Err("restart fraction must be positive".into());
        }
        if self.nelder_mead.budget == 0 {
            return Err("Nelder-Mead budget must be positive".into());
        }
        self.ql.validate()?;
        if let Some(space) = &self.space {
            space.validate()?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct PoolEntry {
    pub keys: RandomKeyVector,
    pub eval: Evaluation,
    pub decode_key: String,
}

/// Distinct elite key vectors sorted by objective.
#[derive(Clone, Debug)]
pub struct SolutionPool {
    entries: Vec<PoolEntry>,
    capacity: usize,
}

impl SolutionPool {
    pub fn new(capacity: usize) -> Self {
        SolutionPool {
            entries: Vec::with_capacity(capacity),
            capacity,
        }
    }

    pub fn entries(&self) -> &[PoolEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Admits an entry if its decode key is new and it fills a vacancy or
    /// strictly beats the worst objective.
    pub fn submit(&mut self, entry: PoolEntry) -> bool {
        if self.entries.iter().any(|e| e.decode_key == entry.decode_key) {
            return false;
        }
        if self.entries.len() >= self.capacity {
            let worst = self.entries.last().map_or(f64::INFINITY, |e| e.eval.objective);
            if entry.eval.objective >= worst {
                return false;
            }
            self.entries.pop();
        }
        let at = self
            .entries
            .partition_point(|e| e.eval.cmp_quality(&entry.eval).is_le());
        self.entries.insert(at, entry);
        true
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }
}

/// One line of the run's event log, stamped with the time since start.
#[derive(Clone, Debug, PartialEq)]
pub struct Event {
    pub elapsed_s: f64,
    pub worker: usize,
    pub line: String,
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub best: PackingSolution,
    pub eval: Evaluation,
    pub time_to_best_s: f64,
    pub best_worker: usize,
    /// Generations completed by each worker.
    pub generations: Vec<u64>,
    /// Event log, grouped by worker and in order within each worker.
    pub events: Vec<Event>,
    pub pool: Vec<PoolEntry>,
    pub restarts: usize,
    pub elapsed_s: f64,
}

impl SolveOutcome {
    pub fn objective(&self) -> f64 {
        self.eval.objective
    }

    /// The event lines without timestamps.
    pub fn log_lines(&self) -> Vec<&str> {
        self.events.iter().map(|e| e.line.as_str()).collect()
    }
}

struct Incumbent {
    solution: PackingSolution,
    eval: Evaluation,
    time_s: f64,
    worker: usize,
}

struct Shared<'a> {
    problem: &'a Problem,
    cfg: &'a RunConfig,
    start: Instant,
    pool: Mutex<SolutionPool>,
    best: Mutex<Option<Incumbent>>,
    stop: AtomicBool,
    restarted: AtomicBool,
}

impl Shared<'_> {
    fn elapsed(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    fn progress(&self, generations: u64) -> f64 {
        match self.cfg.budget {
            Budget::Time(limit) => self.elapsed() / limit.as_secs_f64(),
            Budget::Generations(g) => generations as f64 / g as f64,
        }
    }

    fn beats_best(&self, eval: &Evaluation) -> bool {
        let best = self.best.lock().expect("best register");
        best.as_ref().is_none_or(|b| eval.cmp_quality(&b.eval).is_lt())
    }

    fn offer_solution(&self, solution: PackingSolution, eval: Evaluation, worker: usize) {
        let time_s = self.elapsed();
        let mut best = self.best.lock().expect("best register");
        if best.as_ref().is_none_or(|b| eval.cmp_quality(&b.eval).is_lt()) {
            if self.cfg.target.is_some_and(|t| eval.objective <= t) {
                self.stop.store(true, Ordering::Relaxed);
            }
            *best = Some(Incumbent {
                solution,
                eval,
                time_s,
                worker,
            });
        }
    }

    fn submit(&self, engine: &Engine<'_>, entry: &ArchiveEntry, worker: usize) {
        self.pool.lock().expect("pool").submit(PoolEntry {
            keys: entry.keys.clone(),
            eval: entry.eval,
            decode_key: entry.decode_key.clone(),
        });
        if self.beats_best(&entry.eval) {
            self.offer_solution(engine.decode(&entry.keys), entry.eval, worker);
        }
    }
}

fn run_worker(worker: usize, shared: &Shared<'_>) -> (Vec<Event>, u64, usize) {
    let cfg = shared.cfg;
    let problem = shared.problem;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(worker as u64);
    let engine_cfg = EngineConfig {
        sampling: cfg.sampling,
        nelder_mead: cfg.nelder_mead,
        cache_capacity: cfg.cache.then_some(cfg.cache_capacity),
        decode_base_seed: cfg.seed,
        exec: cfg.exec,
        space: cfg.space.clone().unwrap_or_else(|| ParamSpace::for_items(problem.n())),
        ql: cfg.ql,
    };
    let mut engine = Engine::new(problem, engine_cfg, rng);
    let mut events = Vec::new();
    let mut log = |line: String| {
        events.push(Event {
            elapsed_s: shared.elapsed(),
            worker,
            line,
        })
    };

    let start_segment = |engine: &mut Engine<'_>, log: &mut dyn FnMut(String), generation: u64| {
        let init = engine.initialize();
        shared.offer_solution(init.semi_greedy, init.semi_greedy_eval, worker);
        shared.submit(engine, &init.best, worker);
        log(format!(
            "init worker={worker} gen={generation} best={} {} hit_rate={:.4}",
            init.best.eval.objective,
            init.params,
            engine.hit_rate()
        ));
    };

    start_segment(&mut engine, &mut log, 0);
    let mut generations = 0u64;
    let mut restarts = 0;
    loop {
        if shared.stop.load(Ordering::Relaxed) {
            break;
        }
        let progress = shared.progress(generations);
        if progress >= 1.0 {
            break;
        }
        if restarts == 0 && cfg.restart_fraction < 1.0 && progress >= cfg.restart_fraction {
            restarts = 1;
            if !shared.restarted.swap(true, Ordering::Relaxed) {
                shared.pool.lock().expect("pool").clear();
            }
            log(format!("restart worker={worker} gen={generations}"));
            start_segment(&mut engine, &mut log, generations);
            continue;
        }
        engine.set_progress(progress);
        let report = engine.run_generation();
        generations += 1;
        if report.improved {
            shared.submit(&engine, &report.best, worker);
        }
        log(format!(
            "gen worker={worker} gen={generations} best={} improved={} {} hit_rate={:.4}",
            report.best.eval.objective,
            u8::from(report.improved),
            report.params,
            report.hit_rate
        ));
    }
    (events, generations, restarts)
}

/// Runs the configured number of workers until the budget is spent (or the
/// target is reached) and returns the best packing seen.
///
/// # Panics
/// If `cfg` fails [`RunConfig::validate`].
pub fn solve(problem: &Problem, cfg: &RunConfig) -> SolveOutcome {
    if let Err(e) = cfg.validate() {
        panic!("invalid run configuration: {e}");
    }
    let shared = Shared {
        problem,
        cfg,
        start: Instant::now(),
        pool: Mutex::new(SolutionPool::new(cfg.pool_size)),
        best: Mutex::new(None),
        stop: AtomicBool::new(false),
        restarted: AtomicBool::new(false),
    };

    let results: Vec<(Vec<Event>, u64, usize)> = if cfg.workers == 1 {
        vec![run_worker(0, &shared)]
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..cfg.workers)
                .map(|w| {
                    let shared = &shared;
                    scope.spawn(move || run_worker(w, shared))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        })
    };

    let elapsed_s = shared.elapsed();
    let best = shared
        .best
        .into_inner()
        .expect("best register")
        .expect("workers always offer a solution");
    let mut events = Vec::new();
    let mut generations = Vec::new();
    let mut restarts = 0;
    for (ev, g, r) in results {
        events.extend(ev);
        generations.push(g);
        restarts += r;
    }
    SolveOutcome {
        best: best.solution,
        eval: best.eval,
        time_to_best_s: best.time_s,
        best_worker: best.worker,
        generations,
        events,
        pool: shared.pool.into_inner().expect("pool").entries,
        restarts,
        elapsed_s,
    }
}
