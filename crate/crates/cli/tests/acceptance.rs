//! Acceptance criteria, run in order with one PASS/FAIL line each.
//! Exits non-zero if any criterion fails.

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use amsc_cli::config::{Ablation, RunConfig};
use amsc_cli::{cmd_ppa, cmd_run, FusionMethod, Session};
use amsc_core::eval::{paired_t_test, two_sided_p};
use amsc_core::fusion::{
    apdf_forward, apdf_gradients, apdf_init, build_matrix, fuse_majority, fuse_mean, param_count, ApdfModel,
    DistributionMatrix, LinearFusion, Matrix,
};
use amsc_core::DiagnosticDistribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    check(elapsed < limit, format!("took {elapsed:.2?}, limit {limit:?}"))
}

fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("d{i}")).collect()
}

fn matrix(rows: &[Vec<f64>]) -> DistributionMatrix {
    let l = labels(rows[0].len());
    let d: Vec<_> = rows.iter().map(|r| DiagnosticDistribution::new(l.clone(), r.clone())).collect();
    build_matrix(&d).unwrap()
}

fn random_rows(rng: &mut ChaCha8Rng, n_a: usize, n_d: usize, grid: bool) -> Vec<Vec<f64>> {
    (0..n_a)
        .map(|_| {
            if grid {
                let mut u = vec![0u32; n_d];
                for _ in 0..8 {
                    u[rng.gen_range(0..n_d)] += 1;
                }
                u.iter().map(|&x| x as f64 / 8.0).collect()
            } else {
                let raw: Vec<f64> = (0..n_d).map(|_| rng.gen_range(0.01..1.0)).collect();
                let s: f64 = raw.iter().sum();
                raw.iter().map(|x| x / s).collect()
            }
        })
        .collect()
}

fn c1_param_count() -> Outcome {
    let t = Instant::now();
    let ok = (1..=10usize).all(|n| param_count(n, n) == 3 * n.pow(4) + n.pow(3));
    let el = t.elapsed();
    check(ok, "param_count(n, n) != 3n^4 + n^3")?;
    within(el, Duration::from_millis(1))?;
    Ok(format!("n = 1..10 exact, {el:.2?}"))
}

const STEP: f64 = 1e-5;

fn rel_error(a: &[f64], n: &[f64]) -> f64 {
    let diff = a.iter().zip(n).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nn = n.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / na.max(nn).max(1e-12)
}

fn weights(model: &mut ApdfModel, i: usize) -> &mut Matrix {
    match i {
        0 => &mut model.w_q,
        1 => &mut model.w_k,
        2 => &mut model.w_v,
        _ => &mut model.w_o,
    }
}

fn c2_gradients() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst_apdf, mut worst_linear) = (0f64, 0f64);
    for inst in 0..100u64 {
        let n_d = rng.gen_range(2..=5);
        let n_a = rng.gen_range(1..=5);
        let m = matrix(&random_rows(&mut rng, n_a, n_d, false));
        let target = rng.gen_range(0..n_d);

        let model = apdf_init(n_d, n_a, inst, rng.gen_range(0.5..3.0));
        let (_, g) = apdf_gradients(&model, &m, target).unwrap();
        let analytic: Vec<f64> = [&g.w_q, &g.w_k, &g.w_v, &g.w_o].iter().flat_map(|x| x.data.clone()).collect();
        let loss = |mdl: &ApdfModel| -apdf_forward(mdl, &m).unwrap().probs[target].ln();
        let mut numeric = Vec::with_capacity(analytic.len());
        for w in 0..4 {
            for i in 0..weights(&mut model.clone(), w).data.len() {
                let (mut p, mut q) = (model.clone(), model.clone());
                weights(&mut p, w).data[i] += STEP;
                weights(&mut q, w).data[i] -= STEP;
                numeric.push((loss(&p) - loss(&q)) / (2.0 * STEP));
            }
        }
        worst_apdf = worst_apdf.max(rel_error(&analytic, &numeric));

        let lin = LinearFusion::init(n_d, n_a, inst, rng.gen_range(0.5..3.0));
        let (_, lg) = lin.gradient(&m, target).unwrap();
        let numeric: Vec<f64> = (0..lg.data.len())
            .map(|i| {
                let (mut p, mut q) = (lin.clone(), lin.clone());
                p.w.data[i] += STEP;
                q.w.data[i] -= STEP;
                (p.gradient(&m, target).unwrap().0 - q.gradient(&m, target).unwrap().0) / (2.0 * STEP)
            })
            .collect();
        worst_linear = worst_linear.max(rel_error(&lg.data, &numeric));
    }
    let el = t.elapsed();
    check(
        worst_apdf < 1e-4 && worst_linear < 1e-4,
        format!("worst relative error apdf {worst_apdf:e}, linear {worst_linear:e}"),
    )?;
    within(el, Duration::from_secs(10))?;
    Ok(format!("worst relative error apdf {worst_apdf:.1e}, linear {worst_linear:.1e}, {el:.2?}"))
}

fn brute_mean(rows: &[Vec<f64>]) -> Vec<f64> {
    (0..rows[0].len())
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / rows.len() as f64)
        .collect()
}

fn brute_majority(rows: &[Vec<f64>]) -> usize {
    let n_d = rows[0].len();
    let mut votes = vec![0usize; n_d];
    for r in rows {
        let top = (0..n_d).fold(0, |b, j| if r[j] > r[b] { j } else { b });
        votes[top] += 1;
    }
    let means = brute_mean(rows);
    (0..n_d).fold(0, |b, j| {
        if votes[j] > votes[b] || (votes[j] == votes[b] && means[j] > means[b]) {
            j
        } else {
            b
        }
    })
}

fn c3_fusion_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cases: Vec<Vec<Vec<f64>>> = (0..1000)
        .map(|i| {
            let n_d = rng.gen_range(2..=6);
            let n_a = rng.gen_range(1..=5);
            random_rows(&mut rng, n_a, n_d, i % 2 == 1)
        })
        .collect();
    let mats: Vec<_> = cases.iter().map(|r| matrix(r)).collect();
    let t = Instant::now();
    for (rows, m) in cases.iter().zip(&mats) {
        let mean = fuse_mean(m);
        let ok = mean.probs.iter().zip(brute_mean(rows)).all(|(a, b)| (a - b).abs() <= 1e-12);
        check(ok, format!("mean differs on {rows:?}"))?;
        check(fuse_majority(m) == brute_majority(rows), format!("majority differs on {rows:?}"))?;
    }
    let el = t.elapsed();
    within(el, Duration::from_secs(1))?;
    Ok(format!("1000 matrices agree, {el:.2?}"))
}

fn c4_distribution_invariants() -> Outcome {
    let mut session = Session::new(&RunConfig::standard(FusionMethod::Apdf), None).map_err(|e| e.to_string())?;
    check(session.dataset.diseases.len() == 4 && session.dataset.records.len() == 200, "unexpected fixture size")?;
    for method in [FusionMethod::Gp, FusionMethod::Mean, FusionMethod::Apdf, FusionMethod::Linear] {
        session.evaluate(method, None).map_err(|e| e.to_string())?;
    }
    let a = &session.audit;
    check(a.violations.is_empty(), format!("{} violations, first: {:?}", a.violations.len(), a.violations.first()))?;
    check(a.checked > 0, "nothing was audited")?;
    Ok(format!("{} distributions checked, 0 violations", a.checked))
}

fn c5_ordering() -> Outcome {
    let t = Instant::now();
    let mut session = Session::new(&RunConfig::standard(FusionMethod::Apdf), None).map_err(|e| e.to_string())?;
    let mut acc = |m: FusionMethod, a: Option<usize>| session.evaluate(m, a).map(|o| o.result.accuracy).map_err(|e| e.to_string());
    let apdf = acc(FusionMethod::Apdf, None)?;
    let mean = acc(FusionMethod::Mean, None)?;
    let gp = acc(FusionMethod::Gp, None)?;
    let mut best_single = 0f64;
    for i in 0..4 {
        best_single = best_single.max(acc(FusionMethod::Single, Some(i))?);
    }
    let el = t.elapsed();
    let detail = format!("apdf {apdf:.4} mean {mean:.4} gp {gp:.4} best single {best_single:.4}");
    check(apdf >= mean && mean >= gp && apdf >= best_single, detail.clone())?;
    within(el, Duration::from_secs(30))?;
    Ok(format!("{detail}, {el:.2?}"))
}

fn c6_training_cost() -> Outcome {
    let mut session = Session::new(&RunConfig::standard(FusionMethod::Apdf), None).map_err(|e| e.to_string())?;
    let r = session.run().map_err(|e| e.to_string())?.result;
    check(r.param_count == 832, format!("param_count {}", r.param_count))?;
    check(r.train_seconds < 10.0, format!("trained in {:.2} s", r.train_seconds))?;
    Ok(format!("{:.2} s, {} parameters", r.train_seconds, r.param_count))
}

fn c7_recall() -> Outcome {
    let mut session = Session::new(&RunConfig::standard(FusionMethod::Apdf), None).map_err(|e| e.to_string())?;
    let owners: Vec<String> = session
        .panel
        .specialists
        .iter()
        .map(|s| s.knowledge.as_ref().unwrap().disease.clone())
        .collect();
    let table = session.recall_table().map_err(|e| e.to_string())?;
    let (gp, specialists) = table.split_first().unwrap();
    let recall = |r: &amsc_core::eval::EvalResult, d: &str| r.per_disease_recall[d].unwrap_or(f64::NAN);
    let mut margins = Vec::new();
    for (i, d) in owners.iter().enumerate() {
        let own = recall(&specialists[i].1, d);
        let mut rivals = vec![recall(&gp.1, d)];
        rivals.extend((0..owners.len()).filter(|&j| j != i).map(|j| recall(&specialists[j].1, d)));
        let best_rival = rivals.iter().cloned().fold(f64::MIN, f64::max);
        check(own > best_rival, format!("{d}: matched {own:.3} vs best other {best_rival:.3}"))?;
        margins.push(format!("{d} {own:.2}>{best_rival:.2}"));
    }
    Ok(margins.join(", "))
}

fn ablation_accuracy(ablation: Ablation) -> Result<f64, String> {
    let mut cfg = RunConfig::standard(FusionMethod::Apdf);
    cfg.panel.ablation = ablation;
    let mut session = Session::new(&cfg, None).map_err(|e| e.to_string())?;
    Ok(session.run().map_err(|e| e.to_string())?.result.accuracy)
}

fn c8_ablations() -> Outcome {
    let matched = ablation_accuracy(Ablation::None)?;
    let reordered = ablation_accuracy(Ablation::Reordered)?;
    let irrelevant = ablation_accuracy(Ablation::Irrelevant)?;
    let detail = format!("matched {matched:.4} reordered {reordered:.4} irrelevant {irrelevant:.4}");
    check(reordered < matched && irrelevant < matched, detail.clone())?;
    Ok(detail)
}

fn ppa_config(bias: f64, dir: &Path) -> RunConfig {
    let mut cfg = RunConfig::standard(FusionMethod::Gp);
    cfg.backend.position_bias = bias;
    cfg.ppa.max_prompts = Some(50);
    cfg.output.path = dir.join(format!("ppa-{bias}.json"));
    cfg
}

fn c9_ppa() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let plain = cmd_ppa(&ppa_config(0.0, dir.path()), None).map_err(|e| e.to_string())?;
    check(plain.prompt_count == 50, format!("{} prompts", plain.prompt_count))?;
    check(plain.permutations_per_prompt == 24, "not exhaustive")?;
    check(plain.mean_ppa == 1.0, format!("unbiased mean PPA {}", plain.mean_ppa))?;
    let biased = cmd_ppa(&ppa_config(10.0, dir.path()), None).map_err(|e| e.to_string())?;
    check(biased.mean_ppa < 1.0, format!("biased mean PPA {}", biased.mean_ppa))?;
    Ok(format!("unbiased {:.4}, position_bias 10 → {:.4} over 50 prompts", plain.mean_ppa, biased.mean_ppa))
}

fn c10_ttest() -> Outcome {
    let p = two_sided_p(2.776, 4.0);
    check((p - 0.050).abs() < 1e-3, format!("p(2.776, 4) = {p}"))?;
    // Differences 1, 2, 3, 4, 5.5: mean 3.1, sd ≈ 1.7464, t ≈ 3.969.
    let a = [2.0, 4.0, 6.0, 8.0, 10.5];
    let b = [1.0, 2.0, 3.0, 4.0, 5.0];
    let r = paired_t_test(&a, &b).map_err(|e| e.to_string())?;
    let sd = ((4.41 + 1.21 + 0.01 + 0.81 + 5.76) / 4.0f64).sqrt();
    let t = 3.1 / (sd / 5f64.sqrt());
    check((r.t - t).abs() < 1e-9 && r.df == 4, format!("t = {} df = {}", r.t, r.df))?;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..100 {
        let n = rng.gen_range(2..50);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let (xy, yx) = (paired_t_test(&x, &y).unwrap(), paired_t_test(&y, &x).unwrap());
        check(xy.t == -yx.t && xy.p == yx.p, "antisymmetry violated")?;
    }
    Ok(format!("p(2.776, df 4) = {p:.4}; antisymmetric over 100 pairs"))
}

fn report_lines(path: &Path, mask: &[&str]) -> Result<String, String> {
    let text = fs::read_to_string(path).map_err(|e| e.to_string())?;
    Ok(text
        .split_inclusive('\n')
        .filter(|l| !mask.iter().any(|k| l.trim_start().starts_with(&format!("\"{k}\":"))))
        .collect())
}

fn twice(method: FusionMethod, dir: &Path) -> Result<[(std::path::PathBuf, std::path::PathBuf); 2], String> {
    let mut out = Vec::new();
    for run in 0..2 {
        let mut cfg = RunConfig::standard(method);
        cfg.output.path = dir.join(format!("{}-{run}.json", method.tag()));
        let model = dir.join(format!("{}-{run}.model.json", method.tag()));
        cfg.output.model_path = Some(model.clone());
        cmd_run(&cfg, None).map_err(|e| e.to_string())?;
        out.push((cfg.output.path, model));
    }
    Ok([out[0].clone(), out[1].clone()])
}

fn c11_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let [(a, _), (b, _)] = twice(FusionMethod::Mean, dir.path())?;
    check(
        report_lines(&a, &["timestamp"])? == report_lines(&b, &["timestamp"])?,
        "mean-fusion reports differ outside the timestamp",
    )?;
    // Trained systems also report wall-clock training time, which is not reproducible.
    let [(a, ma), (b, mb)] = twice(FusionMethod::Apdf, dir.path())?;
    let mask = ["timestamp", "train_seconds"];
    check(report_lines(&a, &mask)? == report_lines(&b, &mask)?, "apdf reports differ")?;
    let (wa, wb) = (fs::read(ma).map_err(|e| e.to_string())?, fs::read(mb).map_err(|e| e.to_string())?);
    check(wa == wb, "trained weights differ")?;
    Ok("mean reports byte-identical except timestamp; apdf reports identical except timestamp and train_seconds, weights byte-identical".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("parameter-count identity", c1_param_count),
        ("gradient correctness", c2_gradients),
        ("fusion oracles", c3_fusion_oracles),
        ("distribution invariants", c4_distribution_invariants),
        ("end-to-end ordering", c5_ordering),
        ("training cost", c6_training_cost),
        ("recall pattern", c7_recall),
        ("knowledge ablations", c8_ablations),
        ("PPA", c9_ppa),
        ("t-test oracle", c10_ttest),
        ("determinism", c11_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS criterion {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
