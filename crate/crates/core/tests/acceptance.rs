#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

//! Acceptance checks, one line per criterion:
//!
//! ```text
//! PASS  alignment      golden mappings exact; 200/200 fuzz contexts sound (0.01 s, limit 5 s)
//! ```
//!
//! Runs without the libtest harness so that every line is printed; the
//! process exits non-zero if any criterion fails.

mod common;

use std::collections::{BTreeSet, HashMap};
use std::process::Command;
use std::time::{Duration, Instant};

use common::workspace::{binary, Workspace};
use common::OracleStrategy;
use distal_core::active::{
    kmeans, largest_remainder, run_simulation, select, EmbeddingRecord, EmbeddingTable, MarginMode, Pool,
    PredictionRecord, PredictionSource, Schedule, Strategy, StrategyConfig,
};
use distal_core::align::{align, TokenSequence};
use distal_core::loss::{combined_loss, soft_loss, tempered_softmax, DistillConfig, GoldSpan, SpanLogits};
use distal_core::metrics::{evaluate, MissingPolicy};
use distal_core::qa_data::load_squad;
use distal_core::resample::{resample, Method};
use distal_core::stats::{paired_bootstrap, DeltaSample};
use rand::Rng;
use serde_json::Value;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn timed(limit: Option<Duration>, check: impl FnOnce() -> Outcome) -> Outcome {
    let t0 = Instant::now();
    let detail = check()?;
    let elapsed = t0.elapsed();
    match limit {
        Some(limit) if elapsed >= limit => Err(format!("{detail}; took {elapsed:.2?}, limit {limit:?}")),
        Some(limit) => Ok(format!("{detail} ({:.2} s, limit {} s)", elapsed.as_secs_f64(), limit.as_secs())),
        None => Ok(detail),
    }
}

fn alignment() -> Outcome {
    let goldens: [(&[&str], &[&str], &[usize]); 3] = [
        (&["nuclear", "astrophysics", "."], &["nuclear", "astro", "##physics", "."], &[0, 1, 3]),
        (&["can", "not", "understand"], &["cannot", "understand"], &[0, 0, 1]),
        (&["Accommodation"], &["acc", "##ommo", "##dation"], &[0]),
    ];
    for (s, t, want) in goldens {
        let map = align(&TokenSequence::student(s).unwrap(), &TokenSequence::teacher(t).unwrap())
            .map_err(|e| e.to_string())?;
        ensure!(map.mapping == want, "{s:?}: mapping {:?}, expected {want:?}", map.mapping);
    }
    let mut rng = common::rng(42);
    for case in 0..200 {
        let (s, t) = common::fuzz_context(&mut rng);
        let map = align(&s, &t).map_err(|e| format!("fuzz case {case}: {e}"))?;
        let (sn, tn) = (s.normalized(), t.normalized());
        let groups = map.groups();
        ensure!(groups.last().map(|g| g.1.end) == Some(t.len()), "fuzz case {case}: teacher not covered");
        for (sr, tr) in groups {
            ensure!(sn[sr.clone()].concat() == tn[tr.clone()].concat(), "fuzz case {case}: group {sr:?}/{tr:?}");
        }
    }
    Ok("golden mappings exact; 200/200 fuzz contexts sound".into())
}

fn resampling() -> Outcome {
    let mut rng = common::rng(7);
    for _ in 0..200 {
        let n = rng.random_range(1..64);
        let v = common::random_vec(&mut rng, n, 1e3);
        for m in [Method::Linear, Method::Cubic] {
            let out = resample(&v, n, m).unwrap();
            ensure!(out.iter().zip(&v).all(|(a, b)| a.to_bits() == b.to_bits()), "identity not bitwise at n={n}");
        }
    }
    let mut worst_linear: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(2..100);
        let target = rng.random_range(2..200);
        let (a, b) = (rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        let v: Vec<f64> = (0..n).map(|i| a * i as f64 + b).collect();
        for m in [Method::Linear, Method::Cubic] {
            for (j, y) in resample(&v, target, m).unwrap().iter().enumerate() {
                let x = j as f64 * (n - 1) as f64 / (target - 1) as f64;
                worst_linear = worst_linear.max((y - (a * x + b)).abs());
            }
        }
    }
    ensure!(worst_linear < 1e-9, "linear data error {worst_linear:e}");
    let mut worst_cubic: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(3..80);
        let target = rng.random_range(2..160);
        let v = common::random_vec(&mut rng, n, 10.0);
        let got = resample(&v, target, Method::Cubic).unwrap();
        worst_cubic = worst_cubic.max(common::max_abs_diff(&got, &common::spline_oracle(&v, target)));
    }
    ensure!(worst_cubic < 1e-9, "spline oracle error {worst_cubic:e}");
    Ok(format!(
        "identity bitwise; linear data max err {worst_linear:.1e}; spline oracle max err {worst_cubic:.1e}"
    ))
}

fn loss_stack() -> Outcome {
    let mut rng = common::rng(10);
    let mut worst_norm: f64 = 0.0;
    for _ in 0..10_000 {
        let n = rng.random_range(1..50);
        let v = common::random_vec(&mut rng, n, 20.0);
        let t = rng.random_range(0.1..20.0);
        let c = rng.random_range(-100.0..100.0);
        let p = tempered_softmax(&v, t).unwrap();
        let q = tempered_softmax(&v.iter().map(|x| x + c).collect::<Vec<_>>(), t).unwrap();
        worst_norm = worst_norm.max((p.iter().sum::<f64>() - 1.0).abs()).max(common::max_abs_diff(&p, &q));
    }
    ensure!(worst_norm < 1e-12, "softmax normalization/shift error {worst_norm:e}");

    let span = |rng: &mut rand_chacha::ChaCha8Rng, n| {
        SpanLogits::new(common::random_vec(rng, n, 5.0), common::random_vec(rng, n, 5.0)).unwrap()
    };
    for _ in 0..200 {
        let n = rng.random_range(2..30);
        let (s, t) = (span(&mut rng, n), span(&mut rng, n));
        let gold = GoldSpan::new(0, n - 1).unwrap();
        let at = |rho| combined_loss(&s, &t, &t, gold, &DistillConfig { rho, ..Default::default() }).unwrap().total;
        let (lo, hi, mid) = (at(0.0), at(1.0), at(0.5));
        ensure!((mid - 0.5 * (lo + hi)).abs() <= 1e-9 * mid.abs().max(1.0), "rho midpoint off: {mid} vs {lo}/{hi}");
        ensure!(soft_loss(&s, &s, 10.0).unwrap().abs() < 1e-12, "soft loss of identical inputs is non-zero");
        ensure!(soft_loss(&s, &t, 10.0).unwrap() > 0.0, "soft loss of distinct inputs is zero");
    }

    let oracles: Value = common::read_fixture("loss_oracles.json");
    let to_span = |v: &Value| {
        let vec = |k: &str| v[k].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        SpanLogits::new(vec("start"), vec("end")).unwrap()
    };
    let mut worst_rel: f64 = 0.0;
    let cases = oracles["cases"].as_array().unwrap();
    for case in cases {
        let cfg = DistillConfig {
            use_interpolation: true,
            method: serde_json::from_value(case["method"].clone()).unwrap(),
            ..Default::default()
        };
        let g = &case["gold"];
        let gold = GoldSpan::new(g["start"].as_u64().unwrap() as usize, g["end"].as_u64().unwrap() as usize).unwrap();
        let got = combined_loss(
            &to_span(&case["student"]),
            &to_span(&case["teacher_aligned"]),
            &to_span(&case["teacher"]),
            gold,
            &cfg,
        )
        .map_err(|e| e.to_string())?;
        let e = &case["expected"];
        for (g, key) in [(got.hard, "hard"), (got.soft, "soft"), (got.mse, "mse"), (got.total, "total")] {
            let w = e[key].as_f64().unwrap();
            worst_rel = worst_rel.max((g - w).abs() / w.abs().max(1.0));
        }
    }
    ensure!(worst_rel < 1e-9, "combined loss vs oracle error {worst_rel:.1e}");
    Ok(format!(
        "softmax err {worst_norm:.1e}; rho affine; soft zero iff equal; {} oracle fixtures max rel err {worst_rel:.1e}",
        cases.len()
    ))
}

fn metrics() -> Outcome {
    let dataset = load_squad(common::fixture("squad_eval_200.json")).map_err(|e| e.to_string())?;
    let preds: HashMap<String, String> = common::read_fixture("squad_eval_200_predictions.json");
    let expected: Value = common::read_fixture("squad_eval_200_expected.json");
    let report = evaluate(&dataset, &preds, MissingPolicy::Lenient).map_err(|e| e.to_string())?;
    let (em, f1) = (expected["exact_match"].as_f64().unwrap(), expected["f1"].as_f64().unwrap());
    ensure!(report.count == 200, "{} questions scored", report.count);
    ensure!((report.exact_match - em).abs() < 1e-6, "EM {} vs official {em}", report.exact_match);
    ensure!((report.f1 - f1).abs() < 1e-6, "F1 {} vs official {f1}", report.f1);
    Ok(format!("EM {:.4} / F1 {:.4} equal the official evaluator on 200 questions", report.exact_match, report.f1))
}

struct Fresh {
    rng: rand_chacha::ChaCha8Rng,
    ids: Vec<String>,
}

impl PredictionSource for Fresh {
    fn predictions(&mut self, _: usize, _: &Pool) -> distal_core::Result<HashMap<String, PredictionRecord>> {
        let probs = common::random_probs(&mut self.rng, &self.ids);
        Ok(probs.iter().map(|(id, p)| (id.clone(), common::prediction(id, p))).collect())
    }
}

fn active_learning() -> Outcome {
    // pool partition across a simulated run
    let ids: Vec<String> = (0..1000).map(|i| format!("s{i:04}")).collect();
    let universe: BTreeSet<String> = ids.iter().cloned().collect();
    let mut source = Fresh {
        rng: common::rng(77),
        ids: ids.clone(),
    };
    let cfg = StrategyConfig {
        lenient: true,
        ..Default::default()
    };
    let report = run_simulation(&ids, &Schedule::table_default(), &mut source, &cfg, None).map_err(|e| e.to_string())?;
    let mut previous = BTreeSet::new();
    for c in &report.history {
        ensure!(c.pool.labeled.is_disjoint(&c.pool.unlabeled), "cycle {}: sets overlap", c.cycle);
        let union: BTreeSet<String> = c.pool.labeled.union(&c.pool.unlabeled).cloned().collect();
        ensure!(union == universe, "cycle {}: ids lost", c.cycle);
        ensure!(
            previous.is_subset(&c.pool.labeled) && c.pool.labeled.len() > previous.len(),
            "cycle {}: labeled set did not grow",
            c.cycle
        );
        previous = c.pool.labeled.clone();
    }
    ensure!(report.history.len() == 11 && previous.len() == 1000, "run ended early");

    // exhaustive-sort oracle for the ranking strategies
    let mut rng = common::rng(0);
    let all: Vec<String> = (0..50).map(|i| format!("q{i:04}")).collect();
    let mut checked = 0;
    for _ in 0..20 {
        let mut pool = Pool::new(all.iter().cloned()).unwrap();
        let labeled: Vec<String> = all.iter().filter(|_| rng.random_bool(0.2)).cloned().collect();
        pool.label(&labeled).unwrap();
        let probs = common::random_probs(&mut rng, &all);
        let preds: HashMap<String, PredictionRecord> =
            probs.iter().map(|(id, p)| (id.clone(), common::prediction(id, p))).collect();
        for (strategy, margin_mode, oracle) in [
            (Strategy::Lc, MarginMode::PaperLiteral, OracleStrategy::Lc),
            (Strategy::Margin, MarginMode::PaperLiteral, OracleStrategy::MarginLiteral),
            (Strategy::Margin, MarginMode::Uncertainty, OracleStrategy::MarginUncertainty),
            (Strategy::Entropy, MarginMode::PaperLiteral, OracleStrategy::Entropy(5)),
        ] {
            let cfg = StrategyConfig {
                strategy,
                margin_mode,
                lenient: true,
                ..Default::default()
            };
            for budget in [1, 10, 25] {
                let got = select(&pool, &preds, &cfg, budget, None).map_err(|e| e.to_string())?.ids;
                let want = common::selection_oracle(&pool.unlabeled, &probs, oracle, budget);
                ensure!(got == want, "{strategy:?}/{margin_mode:?} budget {budget}: {got:?} != {want:?}");
                checked += 1;
            }
        }
    }

    // LC + clustering against blob labels; k-means objective on each run
    let mut kmeans_runs = 0;
    for seed in 0..10 {
        let mut rng = common::rng(100 + seed);
        let blob: Vec<usize> = [14, 12, 10, 8, 6].iter().enumerate().flat_map(|(b, &n)| std::iter::repeat_n(b, n)).collect();
        let points: Vec<Vec<f64>> = blob
            .iter()
            .map(|&b| vec![1000.0 * b as f64 + rng.random_range(-0.01..0.01), -500.0 * b as f64 + rng.random_range(-0.01..0.01)])
            .collect();
        let emb = EmbeddingTable::new(all.iter().zip(&points).map(|(id, p)| EmbeddingRecord {
            id: id.clone(),
            vec: p.clone(),
        }))
        .unwrap();
        let probs: HashMap<String, Vec<f64>> = all.iter().map(|id| (id.clone(), vec![rng.random_range(0.05..0.95)])).collect();
        let preds = probs.iter().map(|(id, p)| (id.clone(), common::prediction(id, p))).collect();
        let cfg = StrategyConfig {
            strategy: Strategy::LcCluster,
            k_clusters: 5,
            oversample_factor: 5,
            seed,
            ..Default::default()
        };
        let got = select(&Pool::new(all.iter().cloned()).unwrap(), &preds, &cfg, 10, Some(&emb))
            .map_err(|e| e.to_string())?
            .ids;
        let blob_of: HashMap<&String, usize> = all.iter().zip(blob.iter().copied()).collect();
        let mut quota = common::largest_remainder_oracle(&[14, 12, 10, 8, 6], 10);
        let want: Vec<String> = common::selection_oracle(&all.iter().cloned().collect(), &probs, OracleStrategy::Lc, 50)
            .into_iter()
            .filter(|id| {
                let b = blob_of[id];
                let take = quota[b] > 0;
                quota[b] = quota[b].saturating_sub(1);
                take
            })
            .collect();
        ensure!(got == want, "lc_cluster seed {seed}: {got:?} != {want:?}");
        checked += 1;

        for k in 1..=8 {
            let r = kmeans(&points, k, seed, 100, 1e-12).map_err(|e| e.to_string())?;
            ensure!(
                r.objective.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-12),
                "k-means objective increased: {:?}",
                r.objective
            );
            kmeans_runs += 1;
        }
    }

    let mut rng = common::rng(5);
    for _ in 0..500 {
        let sizes: Vec<usize> = (0..rng.random_range(1..20)).map(|_| rng.random_range(0..50)).collect();
        let total: usize = sizes.iter().sum();
        let budget = rng.random_range(0..=total);
        let q = largest_remainder(&sizes, budget).map_err(|e| e.to_string())?;
        ensure!(q.iter().sum::<usize>() == budget, "quotas {q:?} do not sum to {budget}");
    }
    Ok(format!(
        "11-step run on 1000 ids keeps the partition; {checked} selections equal the oracle; 500 quota vectors sum to budget; {kmeans_runs} k-means runs monotone"
    ))
}

fn bootstrap() -> Outcome {
    for k in [1, 10, 100] {
        let up = paired_bootstrap(&DeltaSample::new(vec![1.0; k]).unwrap(), 10_000, 1, 0.05).unwrap();
        let down = paired_bootstrap(&DeltaSample::new(vec![-1.0; k]).unwrap(), 10_000, 1, 0.05).unwrap();
        ensure!(up.p_value == 0.0 && down.p_value == 1.0, "endpoints {} / {}", up.p_value, down.p_value);
    }
    let mut values = vec![1.0; 20];
    values.extend([-1.0; 10]);
    values.extend([0.0; 30]);
    let delta = DeltaSample::new(values.clone()).unwrap();
    let t0 = Instant::now();
    let got = paired_bootstrap(&delta, 100_000, 2024, 0.05).unwrap();
    let elapsed = t0.elapsed();
    ensure!(elapsed < Duration::from_secs(5), "B = 100000 took {elapsed:?}");
    let want = common::bootstrap_oracle(&values, 100_000, 2024);
    ensure!(got.p_value == want, "p = {} but the oracle gives {want}", got.p_value);

    let mut rng = common::rng(21);
    for _ in 0..1000 {
        let k = rng.random_range(1..40);
        let v: Vec<f64> = (0..k).map(|_| rng.random_range(-2.0..2.0)).collect();
        let p = paired_bootstrap(&DeltaSample::new(v).unwrap(), 200, rng.random(), 0.05).unwrap().p_value;
        ensure!((0.0..=1.0).contains(&p), "p = {p}");
    }
    Ok(format!(
        "endpoints exact; p = {} equals the oracle at B = 100000 ({:.2} s, limit 5 s); 1000 random p in [0, 1]",
        got.p_value,
        elapsed.as_secs_f64()
    ))
}

fn determinism() -> Outcome {
    let ws = Workspace::new();
    let mut names = BTreeSet::new();
    for (name, args) in ws.invocations() {
        let runs: Vec<Vec<u8>> = (0..2)
            .map(|_| {
                let out = Command::new(binary()).args(&args).output().unwrap();
                if out.status.success() {
                    Ok(out.stdout)
                } else {
                    Err(format!("{name} failed: {}", String::from_utf8_lossy(&out.stderr)))
                }
            })
            .collect::<Result<_, _>>()?;
        ensure!(runs[0] == runs[1], "{name}: outputs differ");
        names.insert(name);
    }
    ensure!(names.len() == 7, "only {names:?} exercised");
    Ok(format!("{} subcommands byte-identical across two runs", names.len()))
}

fn main() {
    let checks: Vec<(&str, Option<u64>, fn() -> Outcome)> = vec![
        ("alignment", Some(5), alignment),
        ("resampling", Some(10), resampling),
        ("loss", Some(30), loss_stack),
        ("metrics", None, metrics),
        ("active-learning", None, active_learning),
        ("bootstrap", None, bootstrap),
        ("determinism", None, determinism),
    ];
    let mut failed = 0;
    for (name, limit, check) in checks {
        let outcome = std::panic::catch_unwind(|| timed(limit.map(Duration::from_secs), check))
            .unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS  {name:<16} {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name:<16} {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
