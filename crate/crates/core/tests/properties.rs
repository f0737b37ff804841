mod common;

use std::collections::HashSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use rkaco::aco::{nelder_mead, sample_ant, Archive, Engine, EngineConfig, NelderMeadConfig, SamplingConfig};
use rkaco::decode::{decode_seeded, semi_greedy};
use rkaco::oracle::brute_force;
use rkaco::qlearn::{ParamSpace, QlConfig, QLearner, NUM_ACTIONS};
use rkaco::solution::{Evaluation, Tiebreak};
use rkaco::{
    encode, generate_instance, objective, parse_instance, solve, Budget, CostShape, Problem, RandomKeyVector,
    RunConfig,
};

const T1: &str = "\
QMCVSBPP 1
3 2 1
3
4
5
10 6
14 12
0 5 0
5 0 2
0 2 0
";

fn t1() -> Problem {
    Problem::with_defaults(parse_instance(T1).unwrap())
}

fn eval(objective: f64) -> Evaluation {
    Evaluation {
        objective,
        tiebreak: Tiebreak {
            utilization: 0.0,
            cost_ratio: 0.0,
            resolved_links: 0.0,
        },
    }
}

fn single_state() -> ParamSpace {
    ParamSpace {
        archive_size: vec![5],
        ants: vec![2],
        q: vec![0.1],
        xi: vec![0.85],
    }
}

#[test]
fn truncated_sampling_matches_truncated_normal_moments() {
    let mu = 0.3;
    let dims = 400;
    let mut archive = Archive::new(1);
    archive.update(vec![(RandomKeyVector::new(vec![mu; dims]).unwrap(), eval(1.0), "a".into())]);
    let cfg = SamplingConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let samples: Vec<f64> = (0..100)
        .flat_map(|_| sample_ant(&archive, 0.1, 0.85, &cfg, &mut rng).into_inner())
        .collect();

    // a lone archive member falls back to the default spread
    let sd = cfg.default_sigma;
    let z = Normal::new(0.0, 1.0).unwrap();
    let (a, b) = ((0.0 - mu) / sd, (1.0 - mu) / sd);
    let mass = z.cdf(b) - z.cdf(a);
    let mean = mu + sd * (z.pdf(a) - z.pdf(b)) / mass;
    let var = sd * sd * (1.0 + (a * z.pdf(a) - b * z.pdf(b)) / mass - ((z.pdf(a) - z.pdf(b)) / mass).powi(2));

    let count = samples.len() as f64;
    let got_mean = samples.iter().sum::<f64>() / count;
    let got_var = samples.iter().map(|x| (x - got_mean).powi(2)).sum::<f64>() / (count - 1.0);
    assert!(samples.iter().all(|x| (0.0..1.0).contains(x)));
    assert!((got_mean - mean).abs() < 4.0 * (var / count).sqrt(), "mean {got_mean} vs {mean}");
    assert!((got_var - var).abs() < 0.05 * var, "variance {got_var} vs {var}");
}

#[test]
fn q_value_under_constant_reward_follows_closed_form() {
    let cfg = QlConfig::default();
    let mut learner = QLearner::new(single_state(), cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    learner.init(&mut rng);
    learner.step(1.0, &mut rng);
    let limit = 1.0 / (1.0 - cfg.gamma);
    let rate = 1.0 - cfg.alpha * (1.0 - cfg.gamma);
    for t in 1..=100 {
        learner.step(1.0, &mut rng);
        let want = limit * (1.0 - rate.powi(t));
        assert!((learner.q_value(0, 0) - want).abs() < 1e-12, "t={t}");
    }
    let gap = limit - learner.q_value(0, 0);
    assert!(gap > 0.0 && gap < limit * rate.powi(99));
}

#[test]
fn full_exploration_picks_valid_actions_uniformly() {
    let space = ParamSpace::for_items(30);
    let mut learner = QLearner::new(space.clone(), QlConfig::default());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    learner.init(&mut rng);
    learner.set_epsilon(1.0);
    let mut observed = [0.0; NUM_ACTIONS];
    let mut expected = [0.0; NUM_ACTIONS];
    for _ in 0..40_000 {
        let from = learner.state();
        let valid = space.valid_actions(from);
        learner.step(0.0, &mut rng);
        let to = learner.state();
        let action = valid
            .iter()
            .copied()
            .find(|&a| space.apply(from, a) == Some(to))
            .expect("move along one valid action");
        observed[action] += 1.0;
        for &a in &valid {
            expected[a] += 1.0 / valid.len() as f64;
        }
    }
    for a in 0..NUM_ACTIONS {
        assert!(expected[a] > 0.0, "action {a} never available");
        let rel = (observed[a] - expected[a]).abs() / expected[a];
        assert!(rel < 0.05, "action {a}: {} vs {}", observed[a], expected[a]);
    }
}

#[test]
fn nelder_mead_started_at_the_optimum_stays_there() {
    let p = t1();
    let opt = brute_force(&p).unwrap();
    let start = encode(&opt.solution, 1.0);
    let start_value = objective(&decode_seeded(&start, &p, 0), &p).unwrap();
    assert_eq!(start_value, 14.0);
    let result = nelder_mead(&start, start_value, &NelderMeadConfig::default(), |pts| {
        pts.iter()
            .map(|k| objective(&decode_seeded(k, &p, 0), &p).unwrap())
            .collect()
    });
    assert_eq!(result.value, 14.0);
    assert!(result.evaluations <= 100);
}

fn engine_cfg(n: usize, cache: Option<usize>) -> EngineConfig {
    EngineConfig {
        cache_capacity: cache,
        ..EngineConfig::new(ParamSpace::for_items(n))
    }
}

#[test]
fn archive_best_never_worsens_between_generations() {
    let p = Problem::with_defaults(generate_instance(30, 3, 2, CostShape::Concave, 17));
    let mut engine = Engine::new(&p, engine_cfg(30, Some(1000)), ChaCha8Rng::seed_from_u64(1));
    let mut best = engine.initialize().best.eval.objective;
    for g in 0..150 {
        let report = engine.run_generation();
        assert!(report.best.eval.objective <= best, "generation {g}");
        if report.best.eval.objective < best {
            assert!(report.improved);
        }
        assert!(engine.archive().len() <= engine.archive().capacity());
        best = report.best.eval.objective;
    }
}

#[test]
fn cache_saves_decodes_without_changing_the_search() {
    let p = Problem::with_defaults(generate_instance(20, 2, 2, CostShape::Linear, 23));
    let run = |cache| {
        let mut engine = Engine::new(&p, engine_cfg(20, cache), ChaCha8Rng::seed_from_u64(8));
        engine.initialize();
        let trace: Vec<f64> = (0..300).map(|_| engine.run_generation().best.eval.objective).collect();
        (trace, engine.decodes(), engine.hit_rate())
    };
    let (with, decodes_with, rate) = run(Some(1000));
    let (without, decodes_without, _) = run(None);
    assert_eq!(with, without);
    assert!(decodes_with < decodes_without);
    assert!(rate > 0.0 && rate < 1.0);
}

#[test]
fn tiny_cache_stays_correct_under_eviction() {
    let p = Problem::with_defaults(generate_instance(20, 2, 2, CostShape::Convex, 29));
    let run = |cache| {
        let mut engine = Engine::new(&p, engine_cfg(20, cache), ChaCha8Rng::seed_from_u64(9));
        engine.initialize();
        (0..200).map(|_| engine.run_generation().best.eval.objective).collect::<Vec<_>>()
    };
    assert_eq!(run(Some(3)), run(None));
}

#[test]
fn solver_finds_the_t1_optimum() {
    let cfg = RunConfig {
        budget: Budget::Generations(50),
        ..RunConfig::default()
    };
    let out = solve(&t1(), &cfg);
    assert_eq!(out.objective(), 14.0);
    assert_eq!(objective(&out.best, &t1()).unwrap(), 14.0);
}

#[test]
fn each_worker_restarts_once_at_the_configured_fraction() {
    let p = Problem::with_defaults(generate_instance(15, 2, 2, CostShape::Mixed, 31));
    let cfg = RunConfig {
        budget: Budget::Generations(200),
        workers: 2,
        seed: 4,
        ..RunConfig::default()
    };
    let out = solve(&p, &cfg);
    assert_eq!(out.generations, vec![200, 200]);
    for w in 0..2 {
        let restarts: Vec<&str> = out
            .log_lines()
            .into_iter()
            .filter(|l| l.starts_with(&format!("restart worker={w} ")))
            .collect();
        assert_eq!(restarts, vec![format!("restart worker={w} gen=100")]);
    }
    assert!(out.restarts >= 1);
}

#[test]
fn pool_is_sorted_distinct_and_never_better_than_the_best() {
    let p = Problem::with_defaults(generate_instance(25, 3, 2, CostShape::Concave, 37));
    let cfg = RunConfig {
        budget: Budget::Generations(120),
        workers: 3,
        pool_size: 4,
        ..RunConfig::default()
    };
    let out = solve(&p, &cfg);
    assert!(!out.pool.is_empty() && out.pool.len() <= 4);
    let keys: HashSet<&str> = out.pool.iter().map(|e| e.decode_key.as_str()).collect();
    assert_eq!(keys.len(), out.pool.len());
    assert!(out.pool.windows(2).all(|w| w[0].eval.objective <= w[1].eval.objective));
    assert!(out.objective() <= out.pool[0].eval.objective);
    assert_eq!(objective(&out.best, &p).unwrap(), out.objective());
    assert!(out.best_worker < 3);
}

#[test]
fn semi_greedy_is_often_optimal_on_small_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let instances = common::instance_mix(60, 3..=6, 1..=3, 1..=2, &mut rng);
    let hits = instances
        .into_iter()
        .filter(|inst| {
            let p = Problem::with_defaults(inst.clone());
            let opt = brute_force(&p).unwrap().objective;
            let sg = semi_greedy(&p, &mut rng);
            objective(&sg.solution, &p).unwrap() == opt
        })
        .count();
    assert!(hits >= 36, "{hits}/60 optimal");
}

fn instance_and_keys() -> impl Strategy<Value = (Problem, RandomKeyVector)> {
    (2usize..=9, 1usize..=3, 1usize..=3, 0usize..4, any::<u64>()).prop_flat_map(|(n, m, d, shape, seed)| {
        let p = Problem::with_defaults(generate_instance(n, m, d, CostShape::ALL[shape], seed));
        prop::collection::vec(0.0f64..1.0, n + 3)
            .prop_map(move |keys| (p.clone(), RandomKeyVector::new(keys).unwrap()))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn decoding_is_feasible_deterministic_and_never_beats_the_optimum(
        (p, keys) in instance_and_keys(),
        seed in any::<u64>(),
    ) {
        let a = decode_seeded(&keys, &p, seed);
        let b = decode_seeded(&keys, &p, seed);
        prop_assert!(a.check(p.instance()).is_ok());
        prop_assert_eq!(a.bins(), b.bins());
        let value = objective(&a, &p).unwrap();
        prop_assert!(value >= brute_force(&p).unwrap().objective);
    }

    #[test]
    fn instance_text_round_trips(n in 1usize..=12, m in 1usize..=4, d in 1usize..=3, shape in 0usize..4, seed: u64) {
        let inst = generate_instance(n, m, d, CostShape::ALL[shape], seed);
        let back = parse_instance(&inst.to_text()).unwrap();
        prop_assert_eq!(back.to_text(), inst.to_text());
    }

    #[test]
    fn encoding_preserves_the_partition((p, keys) in instance_and_keys()) {
        let sol = decode_seeded(&keys, &p, 1);
        let enc = encode(&sol, 0.5);
        prop_assert_eq!(enc.len(), p.n() + 3);
        prop_assert!(enc.keys().iter().all(|k| (0.0..1.0).contains(k)));
        let mut order: Vec<usize> = (0..p.n()).collect();
        order.sort_by(|&i, &j| enc.keys()[i].total_cmp(&enc.keys()[j]));
        let flat: Vec<usize> = sol.bins().iter().flat_map(|b| b.items().to_vec()).collect();
        prop_assert_eq!(order, flat);
    }
}
