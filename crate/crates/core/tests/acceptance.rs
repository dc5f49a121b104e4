//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line for
//! each, and exits nonzero if any failed.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fs;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use drivestyle::dataset::LabeledDataset;
use drivestyle::experiment::{self, ExperimentConfig, FeatureSource, SelectionSettings, SplitSettings};
use drivestyle::features::{extract, FEATURE_COUNT, FEATURE_NAMES};
use drivestyle::gaussfit::{eval_two_gaussians, fit_two_gaussians, jacobian_row, GaussianPair};
use drivestyle::learners::{auc_fraction, KernelSpec, MetricsReport, ModelSpec};
use drivestyle::rules::{classify_braking, BrakeThresholds, Severity, STANDARD_GRAVITY};
use drivestyle::selection::{gradient_check, nca_fit, select, NcaParams};
use drivestyle::sensor::{save_segments, Label, ManeuverKind, SensorSample, SensorSegment};
use drivestyle::synth::generate_corpus;
use drivestyle::wavelet::{decompose4, reconstruct};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Outcome of one criterion: pass flag plus a short measurement summary.
type Outcome = (bool, String);

type Criterion = (&'static str, fn() -> Outcome);

fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

fn dwt_reconstruction() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_rec, mut worst_energy) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let x = normal_vec(&mut rng, 64);
        let dec = decompose4(&x).unwrap();
        let back = reconstruct(&dec, x.len()).unwrap();
        let err = x.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let energy: f64 = x.iter().map(|v| v * v).sum();
        worst_rec = worst_rec.max(err);
        worst_energy = worst_energy.max((dec.energy() - energy).abs() / energy);
    }
    let elapsed = start.elapsed();
    let ok = worst_rec < 1e-9 && worst_energy < 1e-9 && elapsed < Duration::from_secs(5);
    (ok, format!("max rec err {worst_rec:.2e}, max energy err {worst_energy:.2e}, {elapsed:.2?}"))
}

/// Textbook periodic convolution with the time-reversed filter, keeping
/// the odd outputs.
fn naive_analysis(x: &[f64], filter: [f64; 2]) -> Vec<f64> {
    let n = x.len();
    let conv: Vec<f64> = (0..n)
        .map(|m| filter[1] * x[m] + filter[0] * x[(m + n - 1) % n])
        .collect();
    conv.into_iter().skip(1).step_by(2).collect()
}

fn dwt_oracle() -> Outcome {
    let low = [FRAC_1_SQRT_2, FRAC_1_SQRT_2];
    let high = [FRAC_1_SQRT_2, -FRAC_1_SQRT_2];
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let x = normal_vec(&mut rng, 128);
        let dec = decompose4(&x).unwrap();
        let mut approx = x.clone();
        let mut details = Vec::new();
        for _ in 0..4 {
            details.push(naive_analysis(&approx, high));
            approx = naive_analysis(&approx, low);
        }
        let expected = [&approx, &details[3], &details[2], &details[1], &details[0]];
        for (band, want) in dec.bands().iter().zip(expected) {
            for (a, b) in band.iter().zip(want.iter()) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    (worst < 1e-12, format!("max deviation {worst:.2e}"))
}

fn random_segment(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> SensorSegment {
    let samples: Vec<SensorSample> = (0..n)
        .map(|i| SensorSample {
            t: i as f64 / 20.0,
            ax: scale * rng.sample::<f64, _>(StandardNormal),
            ay: scale * (1.0 + rng.sample::<f64, _>(StandardNormal)),
            az: 9.8,
            gx: 0.0,
            gy: 0.0,
            gz: scale * rng.sample::<f64, _>(StandardNormal),
        })
        .collect();
    SensorSegment::new("r", ManeuverKind::Turn, Label::Safe, 20.0, samples).unwrap()
}

fn feature_schema() -> Outcome {
    let mut expected = vec!["duration".to_string()];
    for ch in ["gz", "ay", "ax"] {
        expected.push(format!("{ch}_var"));
        expected.push(format!("{ch}_mean"));
        for band in ["a4", "d4", "d3", "d2", "d1"] {
            expected.push(format!("{ch}_{band}_var"));
        }
    }
    let names_ok = FEATURE_COUNT == 22 && FEATURE_NAMES.iter().zip(&expected).all(|(a, b)| *a == b);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = rng.random_range(16..200);
        let alpha = rng.random_range(-5.0..5.0);
        let base = random_segment(&mut rng, n, 1.0);
        let scaled_samples: Vec<SensorSample> = base
            .samples()
            .iter()
            .map(|s| SensorSample {
                ax: alpha * s.ax,
                ay: alpha * s.ay,
                gz: alpha * s.gz,
                ..*s
            })
            .collect();
        let scaled = base.with_samples(scaled_samples).unwrap();
        let (f, g) = (extract(&base).unwrap(), extract(&scaled).unwrap());
        for (i, name) in FEATURE_NAMES.iter().enumerate() {
            let factor = if *name == "duration" {
                1.0
            } else if name.ends_with("_mean") {
                alpha
            } else {
                alpha * alpha
            };
            let want = factor * f.values()[i];
            worst = worst.max((g.values()[i] - want).abs() / want.abs().max(1.0));
        }
    }
    (
        names_ok && worst < 1e-9,
        format!("order ok: {names_ok}, max equivariance err {worst:.2e}"),
    )
}

fn nca() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = rng.random_range(10..40);
        let d = rng.random_range(1..8);
        let x: Vec<Vec<f64>> = (0..n).map(|_| normal_vec(&mut rng, d)).collect();
        let y: Vec<Label> = (0..n).map(|i| if i % 2 == 0 { Label::Safe } else { Label::Dangerous }).collect();
        let ds = LabeledDataset::new(&x, &y).unwrap();
        let w: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..1.5)).collect();
        let sigma = rng.random_range(0.5..2.0);
        worst = worst.max(gradient_check(&ds, &w, sigma, 1.0 / n as f64, 1e-5).unwrap());
    }

    let mut hits = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let informative = rng.random_range(0..22);
        let mut x = Vec::with_capacity(200);
        let mut y = Vec::with_capacity(200);
        for i in 0..200 {
            let positive = i % 2 == 1;
            let mut row = normal_vec(&mut rng, 22);
            let offset = rng.random_range(0.5..1.5);
            row[informative] = if positive { offset } else { -offset };
            x.push(row);
            y.push(if positive { Label::Dangerous } else { Label::Safe });
        }
        let fw = nca_fit(&LabeledDataset::new(&x, &y).unwrap(), &NcaParams::default()).unwrap();
        if select(&fw, 0.1) == vec![informative + 1] {
            hits += 1;
        }
    }
    (
        worst < 1e-5 && hits >= 95,
        format!("max gradient err {worst:.2e}, planted feature isolated in {hits}/100 seeds"),
    )
}

fn best(rows: &[MetricsReport]) -> &MetricsReport {
    rows.iter().max_by(|a, b| a.auc.total_cmp(&b.auc)).expect("nonempty sweep")
}

fn sweep(segments: &[SensorSegment], models: Vec<ModelSpec>) -> Vec<MetricsReport> {
    let cfg = ExperimentConfig {
        inputs: vec!["<memory>".into()],
        kind: None,
        feature_source: FeatureSource::Wavelet22,
        models,
        split: SplitSettings::default(),
        selection: SelectionSettings::default(),
        output_dir: "<unused>".into(),
        seed: 1,
    };
    experiment::run_on_segments(&cfg, segments).unwrap().results
}

fn classifier_tables() -> Outcome {
    let start = Instant::now();
    let mlp_sweep: Vec<ModelSpec> = (2..=6).map(ModelSpec::mlp).collect();
    let rbf_sweep: Vec<ModelSpec> = [2, 4, 6].into_iter().map(ModelSpec::rbf).collect();
    let svm = vec![ModelSpec::svm(KernelSpec::default(), 1.0)];

    let turns = generate_corpus(ManeuverKind::Turn, 120, 9);
    let t_mlp = sweep(&turns, mlp_sweep.clone());
    let t_rbf = sweep(&turns, rbf_sweep.clone());
    let t_svm = sweep(&turns, svm.clone());

    let lanes = generate_corpus(ManeuverKind::LaneChange, 40, 1);
    let l_best: Vec<f64> = [mlp_sweep, rbf_sweep, svm]
        .into_iter()
        .map(|models| best(&sweep(&lanes, models)).auc)
        .collect();
    let elapsed = start.elapsed();

    let mlp = best(&t_mlp);
    let rbf = best(&t_rbf);
    let ok = mlp.auc >= 0.98
        && mlp.tpr >= 0.95
        && rbf.auc >= 0.97
        && t_svm[0].auc >= 0.98
        && l_best.iter().all(|a| *a >= 0.95)
        && elapsed < Duration::from_secs(120);
    let summary = format!(
        "turn: MLP best AUC {:.4} TPR {:.4} (hidden {}), RBF best AUC {:.4}, SVM AUC {:.4}; \
         lane change best AUC MLP {:.4} RBF {:.4} SVM {:.4}; {elapsed:.1?}",
        mlp.auc, mlp.tpr, mlp.row_label, rbf.auc, t_svm[0].auc, l_best[0], l_best[1], l_best[2]
    );
    (ok, summary)
}

fn auc_exact() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut mismatches = 0;
    let mut checked = 0;
    while checked < 200 {
        let n = rng.random_range(2..60);
        // a small score alphabet forces plenty of ties
        let levels = rng.random_range(1..10);
        let scores: Vec<f64> = (0..n).map(|_| rng.random_range(0..levels) as f64 * 0.25).collect();
        let truth: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        let (p, q) = (truth.iter().filter(|t| **t).count(), truth.iter().filter(|t| !**t).count());
        if p == 0 || q == 0 {
            assert!(auc_fraction(&scores, &truth).is_none());
            continue;
        }
        checked += 1;
        // twice the Mann-Whitney count: 2 per win, 1 per tie
        let mut twice_u: u128 = 0;
        for i in (0..n).filter(|&i| truth[i]) {
            for j in (0..n).filter(|&j| !truth[j]) {
                twice_u += match scores[i].partial_cmp(&scores[j]).unwrap() {
                    std::cmp::Ordering::Greater => 2,
                    std::cmp::Ordering::Equal => 1,
                    std::cmp::Ordering::Less => 0,
                };
            }
        }
        let denom = 2 * (p * q) as u128;
        let (num, den) = auc_fraction(&scores, &truth).unwrap();
        if num * denom != twice_u * den {
            mismatches += 1;
        }
    }
    (mismatches == 0, format!("{mismatches} mismatches in {checked} sets"))
}

fn brake_segment(delta: f64, n: usize) -> SensorSegment {
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 / 20.0;
            SensorSample {
                t,
                ax: if t < 1.0 { 0.0 } else { -delta },
                ..Default::default()
            }
        })
        .collect();
    SensorSegment::new("b", ManeuverKind::Brake, Label::Unlabeled, 20.0, samples).unwrap()
}

fn braking_rule() -> Outcome {
    let th = BrakeThresholds::default();
    let sev = |d: f64| classify_braking(&brake_segment(d, 80), &th).unwrap();
    let cases = [
        (0.9, Severity::VerySafe),
        (3.0, Severity::Safe),
        (5.0, Severity::Dangerous),
        (0.11 * STANDARD_GRAVITY, Severity::VerySafe),
        (0.45 * STANDARD_GRAVITY, Severity::Safe),
        (f64::from_bits((0.11 * STANDARD_GRAVITY).to_bits() + 1), Severity::Safe),
        (f64::from_bits((0.45 * STANDARD_GRAVITY).to_bits() + 1), Severity::Dangerous),
    ];
    let failures: Vec<f64> = cases
        .iter()
        .filter(|(d, want)| {
            let v = sev(*d);
            v.delta_a != *d || v.severity != *want
        })
        .map(|(d, _)| *d)
        .collect();
    (failures.is_empty(), format!("{} of {} cases exact", cases.len() - failures.len(), cases.len()))
}

fn gaussian_fit() -> Outcome {
    let truth = GaussianPair::new([1.0, 10.0, 2.0, 0.5, 30.0, 4.0]);
    let ts: Vec<f64> = (0..=800).map(|i| i as f64 / 20.0).collect();
    let ys: Vec<f64> = ts.iter().map(|&t| eval_two_gaussians(&truth, t).unwrap()).collect();
    let fit = fit_two_gaussians(&ts, &ys, 200, 1e-10).unwrap();
    let recovery = fit
        .pair
        .params()
        .iter()
        .zip(truth.params())
        .map(|(g, w)| ((g - w) / w).abs())
        .fold(0.0, f64::max);

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut jac_worst = 0.0f64;
    for _ in 0..200 {
        let p = [
            rng.random_range(-2.0..2.0),
            rng.random_range(0.0..10.0),
            rng.random_range(0.3..3.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(0.0..10.0),
            rng.random_range(0.3..3.0),
        ];
        let x = rng.random_range(-2.0..12.0);
        let row = jacobian_row(&GaussianPair::new(p), x).unwrap();
        for k in 0..6 {
            let h = 1e-6 * p[k].abs().max(1.0);
            let (mut up, mut down) = (p, p);
            up[k] += h;
            down[k] -= h;
            let fd = (eval_two_gaussians(&GaussianPair::new(up), x).unwrap()
                - eval_two_gaussians(&GaussianPair::new(down), x).unwrap())
                / (2.0 * h);
            jac_worst = jac_worst.max((row[k] - fd).abs() / row[k].abs().max(1.0));
        }
    }

    let mut monotone = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = GaussianPair::new([
            rng.random_range(0.2..2.0),
            rng.random_range(1.0..4.0),
            rng.random_range(0.2..1.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(4.0..8.0),
            rng.random_range(0.2..1.5),
        ]);
        let ts: Vec<f64> = (0..180).map(|i| i as f64 / 20.0).collect();
        let ys: Vec<f64> = ts
            .iter()
            .map(|&t| eval_two_gaussians(&p, t).unwrap() + 0.05 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let fit = fit_two_gaussians(&ts, &ys, 200, 1e-10).unwrap();
        if fit.sse_trace.windows(2).all(|w| w[1] <= w[0]) {
            monotone += 1;
        }
    }
    (
        recovery < 1e-3 && jac_worst < 1e-5 && monotone == 100,
        format!(
            "max relative param err {recovery:.2e}, rmse {:.2e}, jacobian err {jac_worst:.2e}, monotone traces {monotone}/100",
            fit.pair.rmse
        ),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("lane.csv");
    save_segments(&corpus, &generate_corpus(ManeuverKind::LaneChange, 20, 3)).unwrap();
    let cfg = ExperimentConfig {
        inputs: vec![corpus],
        kind: Some(ManeuverKind::LaneChange),
        feature_source: FeatureSource::Wavelet22,
        models: vec![
            ModelSpec::mlp(3),
            ModelSpec::rbf(4),
            ModelSpec::svm(KernelSpec::default(), 1.0),
        ],
        split: SplitSettings {
            train_fraction: 0.7,
            repeats: 10,
        },
        selection: SelectionSettings::default(),
        output_dir: dir.path().join("run"),
        seed: 5,
    };
    experiment::run_experiment(&cfg).unwrap();
    let first = fs::read(cfg.output_dir.join("metrics.json")).unwrap();
    let persisted = ExperimentConfig::load(cfg.output_dir.join("config.json")).unwrap();
    experiment::run_experiment(&persisted).unwrap();
    let second = fs::read(cfg.output_dir.join("metrics.json")).unwrap();

    let mut gauss = persisted.clone();
    gauss.feature_source = FeatureSource::Gaussian6;
    gauss.output_dir = dir.path().join("gauss");
    experiment::run_experiment(&gauss).unwrap();
    let g1 = fs::read(gauss.output_dir.join("metrics.json")).unwrap();
    experiment::run_experiment(&ExperimentConfig::load(gauss.output_dir.join("config.json")).unwrap()).unwrap();
    let g2 = fs::read(gauss.output_dir.join("metrics.json")).unwrap();

    (
        first == second && g1 == g2,
        format!("wavelet run identical: {}, gaussian run identical: {}", first == second, g1 == g2),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("DWT reconstruction and energy", dwt_reconstruction),
        ("DWT naive oracle", dwt_oracle),
        ("feature schema", feature_schema),
        ("NCA gradient and planted feature", nca),
        ("classifier tables", classifier_tables),
        ("AUC exact", auc_exact),
        ("braking rule", braking_rule),
        ("Gaussian fit", gaussian_fit),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (ok, detail) = check();
        if !ok {
            failed += 1;
        }
        println!("criterion {} {name}: {} ({detail})", i + 1, if ok { "PASS" } else { "FAIL" });
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
