//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs as a plain binary (`harness = false`). Set `STACKBENCH_CRITERIA` to a
//! comma-separated list such as `5,6,7` to run a subset.

use std::collections::BTreeMap;
use std::time::Instant;

use rand_distr::{Distribution, StandardNormal};
use stackbench::bench::{self, results_csv, AlgorithmEntry, BenchPlan, ResultRow};
use stackbench::ensembles::{nnls_solve, preset_superlearner};
use stackbench::learners::kdtree::KdTree;
use stackbench::learners::mlp::MlpModel;
use stackbench::learners::{self, BoostBase, LearnerModel, LearnerSpec};
use stackbench::simgen::{bayes_accuracy, condition_catalog, generate_with, GeneratorParams, SimCondition, DEFAULT_FLIP_RATE};
use stackbench::{AlgorithmSpec, Matrix, SeededRng};
use statrs::distribution::{Binomial, DiscreteCDF};

const MASTER_SEED: u64 = 20_190_601;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn cond(id: &str) -> SimCondition {
    SimCondition::from_id(id).unwrap()
}

fn plan(conditions: Vec<SimCondition>, sizes: Vec<usize>, algorithms: Vec<AlgorithmEntry>) -> BenchPlan {
    BenchPlan { conditions, sizes, algorithms, record_timing: false, ..BenchPlan::full(MASTER_SEED) }
}

/// Mean accuracy per (condition id, n, algorithm); every row must have succeeded.
fn mean_accuracy(rows: &[ResultRow]) -> BTreeMap<(String, usize, String), f64> {
    let mut sums: BTreeMap<(String, usize, String), (f64, usize)> = BTreeMap::new();
    for r in rows {
        let acc = r.accuracy.unwrap_or_else(|| panic!("{} failed: {:?}", r.algorithm, r.error));
        let e = sums.entry((r.condition.id(), r.n, r.algorithm.clone())).or_default();
        e.0 += acc;
        e.1 += 1;
    }
    sums.into_iter().map(|(k, (s, c))| (k, s / c as f64)).collect()
}

fn mean_of(means: &BTreeMap<(String, usize, String), f64>, c: &str, n: usize, algo: &str) -> f64 {
    means[&(c.to_string(), n, algo.to_string())]
}

fn oracle_dominance() -> Verdict {
    let bases = preset_superlearner().base_specs;
    let mut entries = vec![AlgorithmEntry::preset("superlearner")];
    for b in &bases {
        entries.push(AlgorithmEntry::custom(b.family(), AlgorithmSpec::Learner { spec: b.clone() }));
    }
    let rows = bench::run(&plan(condition_catalog(), vec![2500], entries)).unwrap();
    let means = mean_accuracy(&rows);
    let mut worst = f64::INFINITY;
    let mut lines = Vec::new();
    for c in condition_catalog() {
        let id = c.id();
        let sl = mean_of(&means, &id, 2500, "superlearner");
        let (best_name, best) = bases
            .iter()
            .map(|b| (b.family(), mean_of(&means, &id, 2500, b.family())))
            .fold(("", f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        worst = worst.min(sl - best);
        lines.push(format!("{id}: SL {sl:.4} vs {best_name} {best:.4}"));
    }
    verdict(worst >= -0.02, format!("min(SL - best base) = {worst:+.4} (need >= -0.02); {}", lines.join("; ")))
}

fn superlearner_beats_tuned_dnn() -> Verdict {
    let c = cond("nonlinear-high-mis");
    let entries = vec![AlgorithmEntry::preset("superlearner"), AlgorithmEntry::preset("dnn-tuned")];
    let means = mean_accuracy(&bench::run(&plan(vec![c], vec![500, 1000], entries)).unwrap());
    let gaps: Vec<f64> = [500, 1000]
        .iter()
        .map(|&n| mean_of(&means, &c.id(), n, "superlearner") - mean_of(&means, &c.id(), n, "dnn-tuned"))
        .collect();
    let pass = gaps.iter().any(|&g| g > 0.0) && gaps.iter().all(|&g| g >= -0.01);
    verdict(pass, format!("SL - DNN at n=500: {:+.4}, n=1000: {:+.4}", gaps[0], gaps[1]))
}

fn tuned_dnn_near_bayes() -> Verdict {
    let c = cond("linear-low");
    let means = mean_accuracy(&bench::run(&plan(vec![c], vec![10_000], vec![AlgorithmEntry::preset("dnn-tuned")])).unwrap());
    let dnn = mean_of(&means, &c.id(), 10_000, "dnn-tuned");
    let bayes = bayes_accuracy(&c, 1_000_000, &mut SeededRng::new(MASTER_SEED)).unwrap();
    verdict((bayes - dnn).abs() <= 0.03, format!("DNN {dnn:.4}, Bayes {bayes:.4}, gap {:.4} (need <= 0.03)", (bayes - dnn).abs()))
}

fn knn_superlearner_gains() -> Verdict {
    let c = cond("nonlinear-low");
    let entries = ["knn-superlearner", "knn5", "deep-knn"].map(AlgorithmEntry::preset).to_vec();
    let means = mean_accuracy(&bench::run(&plan(vec![c], vec![1000], entries)).unwrap());
    let m = |a| mean_of(&means, &c.id(), 1000, a);
    let (sl, single, deep) = (m("knn-superlearner"), m("knn5"), m("deep-knn"));
    verdict(
        sl >= single + 0.01 && sl >= deep - 0.005,
        format!("KNN-SL {sl:.4}, KNN(5) {single:.4} (need SL >= +0.01: {:+.4}), deep-KNN {deep:.4} (need >= -0.005: {:+.4})", sl - single, sl - deep),
    )
}

fn gaussian(n: usize, p: usize, rng: &mut SeededRng) -> Matrix {
    Matrix::new(n, p, (0..n * p).map(|_| StandardNormal.sample(rng)).collect()).unwrap()
}

fn kdtree_exact() -> Verdict {
    let mut rng = SeededRng::new(MASTER_SEED);
    let points = gaussian(1000, 13, &mut rng);
    let queries = gaussian(1000, 13, &mut rng);
    let tree = KdTree::build(points.clone(), 8);
    let mut mismatches = 0;
    for q in queries.row_iter() {
        let mut all: Vec<(f64, usize)> = (0..points.rows())
            .map(|i| (points.row(i).iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum(), i))
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for k in [1, 5, 25] {
            let mut got: Vec<usize> = tree.query(q, k).unwrap().iter().map(|p| p.0).collect();
            let mut want: Vec<usize> = all[..k].iter().map(|p| p.1).collect();
            got.sort_unstable();
            want.sort_unstable();
            mismatches += usize::from(got != want);
        }
    }
    verdict(mismatches == 0, format!("{mismatches} mismatched neighbor sets over 3000 queries"))
}

fn residual(z: &Matrix, y: &[f64], w: &[f64]) -> f64 {
    z.row_iter().zip(y).map(|(r, t)| (t - r.iter().zip(w).map(|(a, b)| a * b).sum::<f64>()).powi(2)).sum()
}

fn nnls_optimal() -> Verdict {
    let mut rng = SeededRng::new(MASTER_SEED);
    let mut worst_gap = f64::NEG_INFINITY;
    let mut worst_sum: f64 = 0.0;
    let mut negative = false;
    for _ in 0..20 {
        let z = Matrix::new(30, 3, (0..90).map(|_| rng.unit()).collect()).unwrap();
        let y: Vec<f64> = (0..30).map(|_| f64::from(u8::from(rng.unit() < 0.5))).collect();
        let w = nnls_solve(&z, &y).unwrap().weights;
        let mut grid = f64::INFINITY;
        for a in 0..=100 {
            for b in 0..=(100 - a) {
                let (w0, w1) = (a as f64 / 100.0, b as f64 / 100.0);
                grid = grid.min(residual(&z, &y, &[w0, w1, 1.0 - w0 - w1]));
            }
        }
        worst_gap = worst_gap.max(residual(&z, &y, &w) - grid);
        worst_sum = worst_sum.max((w.iter().sum::<f64>() - 1.0).abs());
        negative |= w.iter().any(|&v| v < 0.0);
    }
    verdict(
        worst_gap <= 1e-6 && worst_sum <= 1e-12 && !negative,
        format!("max(residual - grid) = {worst_gap:.3e}, max |sum - 1| = {worst_sum:.1e}, negative weights: {negative}"),
    )
}

fn gradient_check() -> Verdict {
    let mut rng = SeededRng::new(MASTER_SEED);
    let model = MlpModel::random(&[13, 5, 3, 1, 1], &mut rng);
    let x = gaussian(8, 13, &mut rng);
    let y: Vec<f64> = (0..8).map(|_| f64::from(u8::from(rng.unit() < 0.5))).collect();
    let rows: Vec<usize> = (0..8).collect();
    let analytic = model.gradient(&x, &y, &rows);
    let base = model.params();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for k in 0..base.len() {
        let mut probe = model.clone();
        let mut p = base.clone();
        p[k] = base[k] + h;
        probe.set_params(&p);
        let up = probe.loss(&x, &y, &rows);
        p[k] = base[k] - h;
        probe.set_params(&p);
        let down = probe.loss(&x, &y, &rows);
        let numeric = (up - down) / (2.0 * h);
        worst = worst.max((analytic[k] - numeric).abs() / analytic[k].abs().max(numeric.abs()).max(1e-7));
    }
    verdict(worst < 1e-4, format!("max relative error {worst:.2e} over {} parameters", base.len()))
}

fn boosting_monotone() -> Verdict {
    let mut violations = 0;
    let mut fits = 0;
    for (ci, c) in condition_catalog().iter().enumerate() {
        let data = stackbench::simgen::generate(c, 500, &mut SeededRng::new(MASTER_SEED + ci as u64)).unwrap();
        for spec in [LearnerSpec::boost(), LearnerSpec::Boost { n_rounds: 100, shrinkage: 0.1, base: BoostBase::Linear }] {
            let model = learners::fit(&spec, &data, &SeededRng::new(MASTER_SEED)).unwrap();
            let LearnerModel::Boost(b) = &model.model else { unreachable!() };
            violations += b.train_loss.windows(2).filter(|w| w[1] > w[0]).count();
            fits += 1;
        }
    }
    verdict(violations == 0, format!("{violations} loss increases across {fits} fits"))
}

fn flip_rate() -> Verdict {
    let b = Binomial::new(DEFAULT_FLIP_RATE, 10_000).unwrap();
    let (lo, hi) = (b.inverse_cdf(0.005), b.inverse_cdf(0.995));
    let counts: Vec<u64> = (0..20)
        .map(|s| {
            let sim = generate_with(&cond("mixed-high-mis"), &GeneratorParams::default(), 10_000, &mut SeededRng::new(MASTER_SEED + s))
                .unwrap();
            sim.flipped.len() as u64
        })
        .collect();
    let outside = counts.iter().filter(|k| !(lo..=hi).contains(*k)).count();
    verdict(outside == 0, format!("{outside}/20 seeds outside [{lo}, {hi}]; counts {counts:?}"))
}

fn desk_determinism() -> Verdict {
    let run = |threads| {
        let plan = BenchPlan { thread_count: Some(threads), record_timing: false, ..BenchPlan::desk(MASTER_SEED) };
        let start = Instant::now();
        let bytes = results_csv(&bench::run(&plan).unwrap()).unwrap();
        (bytes, start.elapsed().as_secs_f64())
    };
    let (one, t1) = run(1);
    let (eight, t8) = run(8);
    let rows = one.iter().filter(|&&b| b == b'\n').count() - 1;
    verdict(one == eight, format!("{rows} rows, {} bytes; identical: {} ({t1:.0}s at 1 thread, {t8:.0}s at 8)", one.len(), one == eight))
}

fn fast_superlearner_economy() -> Verdict {
    let c = cond("mixed-high");
    let entries = vec![AlgorithmEntry::preset("superlearner"), AlgorithmEntry::preset("fast-superlearner")];
    let p = BenchPlan { record_timing: true, ..plan(vec![c], vec![10_000], entries) };
    let rows = bench::run(&p).unwrap();
    let means = mean_accuracy(&rows);
    let secs = |a: &str| {
        let t: Vec<f64> = rows.iter().filter(|r| r.algorithm == a).map(|r| r.fit_seconds.unwrap()).collect();
        t.iter().sum::<f64>() / t.len() as f64
    };
    let (full_t, fast_t) = (secs("superlearner"), secs("fast-superlearner"));
    let full = mean_of(&means, &c.id(), 10_000, "superlearner");
    let fast = mean_of(&means, &c.id(), 10_000, "fast-superlearner");
    verdict(
        fast_t < 0.5 * full_t && (fast - full).abs() <= 0.02,
        format!("fit {fast_t:.1}s vs {full_t:.1}s (ratio {:.2}, need < 0.5); accuracy {fast:.4} vs {full:.4}", fast_t / full_t),
    )
}

fn main() {
    let criteria: [(usize, &str, fn() -> Verdict); 11] = [
        (1, "superlearner within 0.02 of its best base learner on all 9 conditions at n=2500", oracle_dominance),
        (2, "superlearner above tuned DNN on nonlinear-high-mis at n=500/1000", superlearner_beats_tuned_dnn),
        (3, "tuned DNN within 0.03 of Bayes accuracy on linear-low at n=10000", tuned_dnn_near_bayes),
        (4, "KNN superlearner gains over KNN(5) and deep KNN on nonlinear-low at n=1000", knn_superlearner_gains),
        (5, "kd-tree neighbor sets equal brute force", kdtree_exact),
        (6, "simplex NNLS at least as good as the 0.01 grid", nnls_optimal),
        (7, "MLP backprop matches central differences", gradient_check),
        (8, "boosting training loss never increases", boosting_monotone),
        (9, "flip counts inside the 99% binomial interval", flip_rate),
        (10, "desk bench byte-identical at 1 and 8 threads", desk_determinism),
        (11, "fast superlearner under half the fit time, accuracy within 0.02", fast_superlearner_economy),
    ];
    let only: Option<Vec<usize>> = std::env::var("STACKBENCH_CRITERIA")
        .ok()
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    let mut failed = Vec::new();
    for (id, title, check) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let v = check();
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!("{status} criterion {id}: {title} [{:.1}s]\n    {}", start.elapsed().as_secs_f64(), v.detail);
        if !v.pass {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
