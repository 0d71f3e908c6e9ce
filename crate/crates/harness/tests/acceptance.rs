//! End-to-end acceptance checks. Prints one line per criterion and exits
//! non-zero if any of them fails.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};
use swarmplan_battle::{
    default_catalog, write_replay, BattleConfig, BattleEnv, BattleState, Heuristic, HeuristicKind, Team, ARENA,
};
use swarmplan_core::assign::{
    amax_assign, brute_force_assign, greedy_round, lp_relax_solve, objective_value, quad_relax_solve,
    quad_relax_trace, relaxed_objective,
};

use swarmplan_core::scoring::gradcheck::{central_difference, relative_error};
use swarmplan_core::scoring::{Checkpoint, CriticParams, Entity, Mlp, PairInputs, ScoringModel, HIDDEN};
use swarmplan_core::{Assignment, ConstraintSet, FwConfig, Inference, RelaxedAssignment, ScoreTable};
use swarmplan_harness::generalize::mean_steps_to_solve;
use swarmplan_harness::{
    evaluate_policy, standard_eval_seeds, train_experiment, EnvKind, ExperimentConfig, LearnedPolicy,
    Policy, RunDir, Scenario,
};
use swarmplan_learner::{
    a2c_gradients, composite_loss, freeze, A2CConfig, Actor, Chunk, EvalSummary, NoiseMode, NoiseWindow, Worker,
};
use swarmplan_rescue::env::{AGENT_FEATURES, ENTITY_FEATURES, ENTITY_KINDS, TASK_FEATURES};

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn rescue(n: usize, m: usize) -> Scenario {
    Scenario::Rescue { n, m }
}

fn c1_baseline() -> Outcome {
    let start = Instant::now();
    let seeds = standard_eval_seeds(1000);
    let mut ok = true;
    let mut parts = Vec::new();
    for (n, m, target) in [(2, 4, 14.34), (5, 10, 13.61), (8, 15, 11.8)] {
        let s = evaluate_policy(&Policy::RescueBaseline, &rescue(n, m), &seeds).map_err(err)?;
        let adj = mean_steps_to_solve(&s);
        ok &= (adj - target).abs() <= 0.5 && s.failures() == 0;
        parts.push(format!("{n}x{m} {adj:.2} (length {:.2}) vs {target}", s.mean_length()));
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(ok && secs < 60.0, format!("{}; {secs:.1}s", parts.join(", ")))
}

fn c2_topline() -> Outcome {
    let start = Instant::now();
    let seeds = standard_eval_seeds(1000);
    let mut ok = true;
    let mut parts = Vec::new();
    for (n, m, target) in [(2, 4, 10.28), (5, 10, 7.19)] {
        let s = evaluate_policy(&Policy::RescueTopline, &rescue(n, m), &seeds).map_err(err)?;
        let adj = mean_steps_to_solve(&s);
        ok &= (adj - target).abs() <= 0.5 && s.failures() == 0;
        parts.push(format!("{n}x{m} {adj:.2} (length {:.2}) vs {target}", s.mean_length()));
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(ok && secs < 600.0, format!("{}; {secs:.1}s", parts.join(", ")))
}

fn c3_lp_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut mismatches = 0;
    for k in 0..200 {
        let (n, m) = (rng.random_range(1..=5), rng.random_range(1..=5));
        // every other instance has integer scores, so ties are common
        let h = Array2::from_shape_fn((n, m), |_| {
            if k % 2 == 0 {
                rng.random_range(-3..=3) as f64
            } else {
                rng.random_range(-1.0..1.0)
            }
        });
        let u = Array1::from_shape_fn(m, |_| rng.random_range(0..=3) as f64);
        let s = ScoreTable::linear(h).map_err(err)?;
        let c = ConstraintSet::new(Array2::ones((n, m)), u).map_err(err)?;
        let relaxed = lp_relax_solve(&s, &c).map_err(err)?;
        let got = objective_value(&greedy_round(&relaxed, &s, &c).map_err(err)?, &s).map_err(err)?;
        let best = objective_value(&brute_force_assign(&s, &c).map_err(err)?, &s).map_err(err)?;
        if got != best {
            mismatches += 1;
        }
    }
    ensure(mismatches == 0, format!("{mismatches} of 200 instances differ from brute force"))
}

fn c4_amax() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut wrong = 0;
    for _ in 0..1000 {
        let (n, m) = (rng.random_range(1..=10), rng.random_range(1..=10));
        let h = Array2::from_shape_fn((n, m), |_| rng.random_range(-3..=3) as f64);
        let a = amax_assign(&ScoreTable::linear(h.clone()).map_err(err)?);
        let want: Vec<Option<usize>> = (0..n)
            .map(|i| {
                let mut best = 0;
                for j in 1..m {
                    if h[[i, j]] > h[[i, best]] {
                        best = j;
                    }
                }
                Some(best)
            })
            .collect();
        if a.targets != want {
            wrong += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(wrong == 0 && secs < 1.0, format!("{wrong} of 1000 tables differ; {secs:.3}s"))
}

fn fw_instance(rng: &mut ChaCha8Rng, with_g: bool) -> (ScoreTable, ConstraintSet) {
    let (n, m) = (rng.random_range(1..7), rng.random_range(1..7));
    let h = Array2::from_shape_fn((n, m), |_| rng.random_range(-1.0..1.0));
    let g = if with_g {
        Array2::from_shape_fn((m, m), |_| rng.random_range(-0.5..0.5))
    } else {
        Array2::zeros((m, m))
    };
    let mu = Array2::from_shape_fn((n, m), |_| rng.random_range(0.1..2.0));
    let u = Array1::from_shape_fn(m, |_| rng.random_range(0.5..3.0));
    (ScoreTable::new(h, Some(g)).unwrap(), ConstraintSet::new(mu, u).unwrap())
}

/// Best objective over every hard assignment of two agents to two tasks.
fn enumerate_2x2(s: &ScoreTable, c: &ConstraintSet) -> f64 {
    let opts = [None, Some(0), Some(1)];
    let mut best = f64::NEG_INFINITY;
    for a in opts {
        for b in opts {
            let x = Assignment { targets: vec![a, b] };
            if swarmplan_core::assign::feasible(&x, c).unwrap() {
                best = best.max(objective_value(&x, s).unwrap());
            }
        }
    }
    best
}

fn c5_frank_wolfe() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let fw = FwConfig::default();
    let mut decreases = 0;
    let mut worst_gap: f64 = 0.0;
    for _ in 0..100 {
        let (s, c) = fw_instance(&mut rng, true);
        let t = quad_relax_trace(&s, &c, &fw, &RelaxedAssignment::zeros(s.n(), s.m())).map_err(err)?;
        decreases += t.objectives.windows(2).filter(|w| w[1] < w[0]).count();
        let (s, c) = fw_instance(&mut rng, false);
        let q = quad_relax_solve(&s, &c, &fw, &RelaxedAssignment::zeros(s.n(), s.m())).map_err(err)?;
        let lp = lp_relax_solve(&s, &c).map_err(err)?;
        let gap = relaxed_objective(&lp.beta, &s).map_err(err)? - relaxed_objective(&q.beta, &s).map_err(err)?;
        worst_gap = worst_gap.max(gap.abs());
    }

    let mut patterns = Vec::new();
    for (sign, want_same) in [(-1.0, false), (1.0, true)] {
        let s = ScoreTable::new(Array2::ones((2, 2)), Some(Array2::eye(2) * sign)).map_err(err)?;
        let c = ConstraintSet::uniform(2, 2, 2.0).map_err(err)?;
        let q = quad_relax_solve(&s, &c, &fw, &RelaxedAssignment::zeros(2, 2)).map_err(err)?;
        let r = greedy_round(&q, &s, &c).map_err(err)?;
        let value = objective_value(&r, &s).map_err(err)?;
        let shape_ok = r.targets.iter().all(Option::is_some) && (r.targets[0] == r.targets[1]) == want_same;
        patterns.push(shape_ok && value == enumerate_2x2(&s, &c));
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(
        decreases == 0 && worst_gap <= 1e-6 && patterns.iter().all(|&p| p) && secs < 1.0,
        format!(
            "{decreases} decreasing steps, max |FW - LP| {worst_gap:.2e}, spread {} group {}; {secs:.3}s",
            patterns[0], patterns[1]
        ),
    )
}

const FD_STEP: f64 = 1e-5;
const MARGIN: f64 = 1e-3;
// The composite loss touches many ReLUs per chunk, so its probes are smaller.
const COMPOSITE_STEP: f64 = 1e-7;
const COMPOSITE_MARGIN: f64 = 1e-5;

fn scoring_gradcheck(rng: &mut ChaCha8Rng) -> Option<f64> {
    let (n, m, a, t) = (rng.random_range(1..4), rng.random_range(1..4), 3, 4);
    let model = ScoringModel::new(a, t, 0, rng.random());
    let feats = |rng: &mut ChaCha8Rng, k: usize, d: usize| -> Vec<Vec<f64>> {
        (0..k).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
    };
    let (agents, tasks) = (feats(rng, n, a), feats(rng, m, t));
    let mut margin = f64::INFINITY;
    for ag in &agents {
        for tk in &tasks {
            let x: Vec<f64> = ag.iter().chain(tk).copied().collect();
            margin = margin.min(model.h_net.forward(&x).unwrap().1.kink_margin());
        }
    }
    for tj in &tasks {
        for tl in &tasks {
            let x: Vec<f64> = tj.iter().chain(tl).copied().collect();
            margin = margin.min(model.g_net.forward(&x).unwrap().1.kink_margin());
        }
    }
    if margin < MARGIN {
        return None;
    }
    let dh = Array2::from_shape_fn((n, m), |_| rng.random_range(-1.0..1.0));
    let dg = Array2::from_shape_fn((m, m), |_| rng.random_range(-1.0..1.0));
    let x = PairInputs { agents: &agents, tasks: &tasks, extras: None };
    let mut grads = model.zero_grads();
    model.backward_pairs(&x, &dh, Some(&dg), &mut grads).unwrap();
    let mut probe = model.clone();
    let fd = central_difference(
        |p| {
            probe.set_flat(p).unwrap();
            let s = probe.score_pairs(&x, true).unwrap();
            (&dh * s.h()).sum() + (&dg * s.g().unwrap()).sum()
        },
        &model.flat(),
        FD_STEP,
    );
    Some(relative_error(&grads.flat(), &fd))
}

fn critic_gradcheck(rng: &mut ChaCha8Rng) -> Option<f64> {
    let (kinds, feat) = (rng.random_range(1..4), rng.random_range(1..6));
    let critic = CriticParams::new(kinds, feat, rng.random());
    let count = rng.random_range(1..7);
    let ents: Vec<Entity> = (0..count)
        .map(|_| Entity::new(rng.random_range(0..kinds), (0..feat).map(|_| rng.random_range(0.0..1.0)).collect()))
        .collect();
    if critic.kink_margin(&ents).unwrap() < MARGIN {
        return None;
    }
    let (_, grads) = critic.value_and_grad(&ents, 1.0).unwrap();
    let mut probe = critic.clone();
    let fd = central_difference(
        |p| {
            probe.set_flat(p).unwrap();
            probe.value(&ents).unwrap()
        },
        &critic.flat(),
        FD_STEP,
    );
    Some(relative_error(&grads.flat(), &fd))
}

fn mlp_gradcheck(rng: &mut ChaCha8Rng) -> Option<f64> {
    let dim = rng.random_range(2..8);
    let net = Mlp::seeded(&[dim, HIDDEN, HIDDEN, 1], rng.random());
    let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let (_, cache) = net.forward(&x).unwrap();
    if cache.kink_margin() < MARGIN {
        return None;
    }
    let (grads, _) = net.backward(&cache, 1.0).unwrap();
    let mut probe = net.clone();
    let fd = central_difference(
        |p| {
            probe.set_flat(p).unwrap();
            probe.forward(&x).unwrap().0
        },
        &net.flat(),
        FD_STEP,
    );
    Some(relative_error(&grads.flat(), &fd))
}

fn rescue_chunks(model: &ScoringModel, inference: Inference, cfg: &A2CConfig, count: usize) -> Vec<Chunk> {
    let actor = Actor::from_config(inference, cfg, 7);
    let mut w = Worker::new(rescue(2, 4).factory(), actor, 0, 1, 500).unwrap();
    (0..count).map(|_| w.rollout(model, cfg.n_steps).unwrap()).collect()
}

/// Smallest distance of a hidden pre-activation from zero over every network
/// evaluation the loss makes on these chunks.
fn chunk_kink_margin(model: &ScoringModel, critic: &CriticParams, chunks: &[Chunk]) -> f64 {
    let mut margin = f64::INFINITY;
    let pair = |net: &Mlp, a: &[f64], b: &[f64]| {
        let x: Vec<f64> = a.iter().chain(b).copied().collect();
        net.forward(&x).unwrap().1.kink_margin()
    };
    for c in chunks {
        for s in &c.steps {
            let o = &s.obs;
            for a in &o.agent_feats {
                for t in &o.task_feats {
                    margin = margin.min(pair(&model.h_net, a, t));
                }
            }
            if s.g_mean.is_some() {
                for tj in &o.task_feats {
                    for tl in &o.task_feats {
                        margin = margin.min(pair(&model.g_net, tj, tl));
                    }
                }
            }
            margin = margin.min(critic.kink_margin(&o.entities).unwrap());
        }
        if let Some(b) = &c.bootstrap {
            margin = margin.min(critic.kink_margin(&b.entities).unwrap());
        }
    }
    margin
}

fn composite_gradcheck(inference: Inference, seed: u64) -> Option<f64> {
    let mut model = ScoringModel::new(AGENT_FEATURES, TASK_FEATURES, 0, seed);
    let critic = CriticParams::new(ENTITY_KINDS, ENTITY_FEATURES, seed + 1);
    let cfg = A2CConfig { sigma: 0.7, lambda: 0.8, ..A2CConfig::rescue() };
    let cs = rescue_chunks(&model, inference, &cfg, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p: Vec<f64> = model.flat().iter().map(|v| v + rng.random_range(-0.02..0.02)).collect();
    model.set_flat(&p).unwrap();
    if chunk_kink_margin(&model, &critic, &cs) < COMPOSITE_MARGIN {
        return None;
    }
    let mut f = freeze(&model, &critic, &cs, &cfg).unwrap();
    // keep every value term away from the kink of the absolute loss
    for (r, a) in f.returns.iter_mut().flatten().zip(f.advantages.iter().flatten()) {
        *r += 0.5 * a.signum() + 0.5 * f64::from(*a == 0.0);
    }
    let np = model.num_params();
    let mut x = model.flat();
    x.extend(critic.flat());
    let fd = central_difference(
        |v| {
            let (mut m, mut c) = (model.clone(), critic.clone());
            m.set_flat(&v[..np]).unwrap();
            c.set_flat(&v[np..]).unwrap();
            let (a, b) = composite_loss(&m, &c, &cs, &f, &cfg).unwrap();
            a + b
        },
        &x,
        COMPOSITE_STEP,
    );
    let (mg, cg) = a2c_gradients(&model, &critic, &cs, &f, &cfg).unwrap();
    let mut an = mg.flat();
    an.extend(cg.flat());
    Some(relative_error(&an, &fd))
}

fn c6_gradients() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = [0.0f64; 3];
    let checks: [fn(&mut ChaCha8Rng) -> Option<f64>; 3] = [mlp_gradcheck, scoring_gradcheck, critic_gradcheck];
    for (k, check) in checks.iter().enumerate() {
        let mut done = 0;
        while done < 50 {
            if let Some(e) = check(&mut rng) {
                worst[k] = worst[k].max(e);
                done += 1;
            }
        }
    }
    let mut composite: f64 = 0.0;
    for inference in [Inference::quad(), Inference::Lp, Inference::Amax] {
        let mut done = 0;
        for seed in 60.. {
            if done == 3 {
                break;
            }
            if let Some(e) = composite_gradcheck(inference, seed) {
                composite = composite.max(e);
                done += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(
        worst.iter().all(|&e| e <= 1e-4) && composite <= 1e-3 && secs < 60.0,
        format!(
            "max rel. error mlp {:.1e}, scoring {:.1e}, critic {:.1e}, composite {composite:.1e}; {secs:.1}s",
            worst[0], worst[1], worst[2]
        ),
    )
}

fn autocov(p: usize, sigma: f64, max_lag: usize, seed: u64) -> Vec<f64> {
    const STEPS: usize = 1_000_000;
    let mut w = NoiseWindow::new(p, NoiseMode::Innovation);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mean = Array2::from_elem((1, 1), 0.25);
    let mut series = Vec::with_capacity(STEPS);
    for t in 0..STEPS + p {
        let h = w.sample(&mean, sigma, &mut rng);
        if t >= p {
            series.push(h[[0, 0]] - mean[[0, 0]]);
        }
    }
    let mu = series.iter().sum::<f64>() / STEPS as f64;
    (0..=max_lag)
        .map(|lag| {
            (0..STEPS - lag).map(|t| (series[t] - mu) * (series[t + lag] - mu)).sum::<f64>() / (STEPS - lag) as f64
        })
        .collect()
}

fn c7_noise() -> Outcome {
    let start = Instant::now();
    let sigma = 0.8;
    let mut worst: f64 = 0.0;
    for (p, seed) in [(1, 71), (3, 72), (10, 73)] {
        for (lag, got) in autocov(p, sigma, p - 1, seed).into_iter().enumerate() {
            let want = (p - lag) as f64 * sigma / p as f64;
            worst = worst.max((got - want).abs() / want);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst <= 0.05 && secs < 60.0, format!("max relative deviation {:.2}%; {secs:.1}s", 100.0 * worst))
}

struct Trained {
    lp: Option<PathBuf>,
    quad: Option<PathBuf>,
}

fn paired_p_value(before: &EvalSummary, after: &EvalSummary) -> Result<(f64, f64), String> {
    let d: Vec<f64> = before
        .episodes
        .iter()
        .zip(&after.episodes)
        .map(|(a, b)| {
            assert_eq!(a.seed, b.seed);
            a.length as f64 - b.length as f64
        })
        .collect();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let sd = (d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    if sd == 0.0 {
        return Ok((mean, if mean > 0.0 { 0.0 } else { 1.0 }));
    }
    let t = mean / (sd / n.sqrt());
    let dist = StudentsT::new(0.0, 1.0, n - 1.0).map_err(err)?;
    Ok((mean, 1.0 - dist.cdf(t)))
}

fn c8_learning(root: &std::path::Path, trained: &mut Trained) -> Outcome {
    let base: ExperimentConfig = serde_json::from_str(include_str!("../configs/rescue_2x4_lp.json")).map_err(err)?;
    let scenario = base.scenario().map_err(err)?;
    let seeds = standard_eval_seeds(1000);
    let (a, t, e) = scenario.model_dims();
    let mut means = Vec::new();
    let mut verdict = None;
    for name in ["lp", "amax", "quad"] {
        let cfg = ExperimentConfig { inference: name.into(), output_dir: root.into(), ..base.clone() };
        let start = Instant::now();
        let run = RunDir::create(root, name).map_err(err)?;
        let out = train_experiment(&cfg, &run).map_err(err)?;
        let secs = start.elapsed().as_secs_f64();
        let learned = LearnedPolicy::from_checkpoint(&Checkpoint::load(&out.checkpoint).map_err(err)?, None).map_err(err)?;
        let after = evaluate_policy(&Policy::Learned(learned.clone()), &scenario, &seeds).map_err(err)?;
        means.push(format!("{name} {:.2}", mean_steps_to_solve(&after)));
        match name {
            "lp" => {
                trained.lp = Some(out.checkpoint.clone());
                let untrained = LearnedPolicy { model: ScoringModel::new(a, t, e, cfg.a2c.seed), ..learned };
                let before = evaluate_policy(&Policy::Learned(untrained), &scenario, &seeds).map_err(err)?;
                let (gain, p) = paired_p_value(&before, &after)?;
                let baseline = mean_steps_to_solve(&evaluate_policy(&Policy::RescueBaseline, &scenario, &seeds).map_err(err)?);
                let mean = mean_steps_to_solve(&after);
                let ok = gain > 0.0 && p < 0.01 && mean <= 14.34 + 0.3 && secs <= 7200.0;
                verdict = Some((
                    ok,
                    format!(
                        "LP-DM {mean:.2} vs untrained {:.2} (paired gain {gain:.2}, p = {p:.1e}); closest baseline {baseline:.2}, bound 14.64; {} updates in {secs:.0}s",
                        mean_steps_to_solve(&before),
                        out.updates
                    ),
                ));
            }
            "quad" => trained.quad = Some(out.checkpoint.clone()),
            _ => {}
        }
    }
    let (ok, detail) = verdict.expect("lp trained");
    ensure(ok, format!("{detail}; in-domain (not gating): {}", means.join(", ")))
}

fn play_battle(name: &str, seed: u64, kind: HeuristicKind) -> Result<(Vec<u8>, BattleEnv, f64), String> {
    let s = swarmplan_battle::Scenario::from_name(name).map_err(err)?.resolve(&default_catalog()).map_err(err)?;
    let mut env = BattleEnv::new(BattleConfig::new(s, seed)).map_err(err)?;
    env.record_replay();
    let mut h = Heuristic::new(kind, seed);
    let (_, total) = env.run(|s| h.act(s)).map_err(err)?;
    let mut bytes = Vec::new();
    write_replay(env.replay(), &mut bytes).map_err(err)?;
    Ok((bytes, env, total))
}

fn overkill(state: &BattleState, a: &Assignment) -> bool {
    state.theirs.iter().enumerate().any(|(j, enemy)| {
        let dmg: Vec<f64> = (0..state.ours.len())
            .filter(|&i| a.targets[i] == Some(j))
            .map(|i| state.ours[i].spec.stats.damage_per_attack)
            .collect();
        dmg.last().is_some_and(|last| !enemy.alive() || dmg.iter().sum::<f64>() - last >= enemy.health)
    })
}

fn c9_battle() -> Outcome {
    let mut nondeterministic = 0;
    let mut worst: f64 = 0.0;
    for (k, name) in ["m5v5", "w4v6", "zh3v3"].iter().enumerate() {
        for kind in HeuristicKind::ALL {
            let seed = 90 + k as u64;
            let (a, env, total) = play_battle(name, seed, kind)?;
            let (b, _, _) = play_battle(name, seed, kind)?;
            nondeterministic += usize::from(a != b);
            let s = env.state();
            let theirs0: f64 = s.theirs.iter().map(|u| u.spec.stats.max_health).sum();
            let h0 = env.initial_health();
            let telescoped = (s.health(Team::Ours) - h0 + theirs0 - s.health(Team::Theirs)) / h0;
            worst = worst.max((total - telescoped).abs());
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut violations = 0;
    for event in 0..10_000u64 {
        let name = format!("{}{}v{}", ["m", "w", "zh"][rng.random_range(0..3)], rng.random_range(1..8), rng.random_range(1..8));
        let sc = swarmplan_battle::Scenario::from_name(&name).map_err(err)?.resolve(&default_catalog()).map_err(err)?;
        let mut s = swarmplan_battle::spawn_battle(&BattleConfig::new(sc, event));
        for u in s.ours.iter_mut().chain(s.theirs.iter_mut()) {
            let hp = u.spec.stats.max_health;
            u.health = if rng.random_bool(0.15) { 0.0 } else { rng.random_range(0.0..hp).ceil() };
            u.pos = [rng.random_range(0.0..ARENA), rng.random_range(0.0..ARENA)];
        }
        let a = Heuristic::new(HeuristicKind::Wcnok, event).act(&s);
        violations += usize::from(overkill(&s, &a));
    }

    let sc = Scenario::parse(EnvKind::Battle, "m80v82").map_err(err)?;
    let (a, t, e) = sc.model_dims();
    let model = ScoringModel::new(a, t, e, 9);
    let env = sc.factory()(0).map_err(err)?;
    let quad = Inference::quad();
    let mut times = Vec::new();
    for _ in 0..6 {
        let start = Instant::now();
        let obs = env.observe();
        let x = PairInputs { agents: &obs.agent_feats, tasks: &obs.task_feats, extras: obs.pair_extras.as_ref() };
        let scores = model.score_pairs(&x, true).map_err(err)?;
        quad.infer(&scores, &obs.constraints).map_err(err)?;
        times.push(start.elapsed().as_secs_f64() * 1e3);
    }
    times.remove(0);
    times.sort_by(f64::total_cmp);
    let median = times[times.len() / 2];

    ensure(
        nondeterministic == 0 && worst <= 1e-12 && violations == 0 && median <= 600.0,
        format!(
            "{nondeterministic} non-identical replays, max telescoping error {worst:.1e}, {violations} overkill events in 10^4, quad 80x82 latency {median:.0} ms"
        ),
    )
}

fn c10_zero_shot(trained: &Trained) -> Outcome {
    let seeds = standard_eval_seeds(1000);
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, path) in [("lp", &trained.lp), ("quad", &trained.quad)] {
        let path = path.as_ref().ok_or_else(|| format!("no {name} checkpoint from the training criterion"))?;
        let policy = LearnedPolicy::from_checkpoint(&Checkpoint::load(path).map_err(err)?, None).map_err(err)?;
        for (n, m) in [(5, 10), (8, 15)] {
            let s = evaluate_policy(&Policy::Learned(policy.clone()), &rescue(n, m), &seeds).map_err(err)?;
            let done = 1.0 - s.failures() as f64 / s.episodes.len() as f64;
            ok &= done >= 0.99;
            parts.push(format!("{name} {n}x{m} {:.1}% done, {:.2} steps", 100.0 * done, mean_steps_to_solve(&s)));
        }
    }
    ensure(ok, parts.join(", "))
}

fn report(id: usize, title: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let result = f();
    let secs = start.elapsed().as_secs_f64();
    let (tag, detail) = match &result {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    println!("criterion {id:>2} {tag} {title}: {detail} [{secs:.1}s]");
    result.is_ok()
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temporary directory");
    let mut trained = Trained { lp: None, quad: None };
    let results = [
        report(1, "closest baseline", c1_baseline),
        report(2, "exact topline", c2_topline),
        report(3, "LP inference exactness", c3_lp_exactness),
        report(4, "AMax oracle", c4_amax),
        report(5, "Frank-Wolfe properties", c5_frank_wolfe),
        report(6, "gradient checks", c6_gradients),
        report(7, "correlated noise", c7_noise),
        report(8, "desk-scale learning", || c8_learning(dir.path(), &mut trained)),
        report(9, "battle simulator", c9_battle),
        report(10, "zero-shot plumbing", || c10_zero_shot(&trained)),
    ];
    let passed = results.iter().filter(|&&r| r).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
