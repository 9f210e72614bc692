//! Acceptance suite: one test per release criterion, each printing a single
//! summary line. Tolerances are pinned here and nowhere else; if a criterion
//! cannot be met the test stays honest and fails.

use radiomap_core::eval::{
    adapt_and_report, compare, evaluate, report_json, scene_split, Aggregate, EvalReport,
    Evaluator, SceneRow, TtaInfo,
};
use radiomap_core::grid::{NormRange, RadioMap};
use radiomap_core::ingest::format::{load_map, load_scene, save_map, save_scene};
use radiomap_core::ingest::{Band, Scene};
use radiomap_core::kriging::{
    fit_scene_model, krige_predict, KrigeOpts, VariogramKind, VariogramModel,
};
use radiomap_core::pit::checkpoint::{load_weights, save_weights};
use radiomap_core::pit::optim::{adam_step, sgd_step, AdamState, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
use radiomap_core::pit::tta::{adapt_stream, TtaConfig, TtaOptimizer};
use radiomap_core::pit::weights::PitWeights;
use radiomap_core::pit::{
    backward, forward_loss, gradient_check, predict_values, pretrain, MapTask, PitConfig,
    TrainConfig,
};
use radiomap_core::sample::{map_candidates, mask_generate, KnownPoint, QueryPoint};
use radiomap_core::synth::{generate_dataset, sample_scene, SynthConfig, SynthMap};
use radiomap_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn band() -> Band {
    Band::new(100.0, 200.0).unwrap()
}

fn norm() -> NormRange {
    NormRange::new(-120.0, -40.0).unwrap()
}

/// Model small enough for single-core training runs, large enough to learn.
fn small_model() -> PitConfig {
    PitConfig {
        d_model: 16,
        n_heads: 2,
        n_enc_layers: 3,
        n_dec_layers: 3,
        d_ff: 64,
        n_fourier: 4,
        decode_chunk: 256,
    }
}

fn report_with(method: &str, seed: u64, rmses: &[f64]) -> EvalReport {
    let scenes: Vec<SceneRow> = rmses
        .iter()
        .enumerate()
        .map(|(i, &rmse)| SceneRow {
            id: format!("s{i}"),
            n_known: 4,
            n_query: 2,
            rmse,
        })
        .collect();
    let n = rmses.len() as f64;
    let mean = rmses.iter().sum::<f64>() / n;
    let var = rmses.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    EvalReport {
        method: method.into(),
        seed,
        tta: TtaInfo {
            enabled: false,
            eta: 0.0,
        },
        scenes,
        aggregate: Aggregate {
            mean,
            std: var.sqrt(),
        },
        skipped: Vec::new(),
    }
}

#[test]
fn comparison_delta_matches_definition() {
    // Means 0.2 vs 0.1: the improvement is (0.2 - 0.1) / 0.2 * 100 = +50%.
    let base = report_with("kriging", 3, &[0.1, 0.3]);
    let better = report_with("pit", 3, &[0.05, 0.15]);
    let delta = compare(&base, &better).unwrap();
    assert!((delta - 50.0).abs() < 1e-12, "expected +50%, got {delta}");

    // Means 0.2 vs 0.3: a regression reads as -50%.
    let worse = report_with("pit", 3, &[0.15, 0.45]);
    let delta_worse = compare(&base, &worse).unwrap();
    assert!(
        (delta_worse + 50.0).abs() < 1e-12,
        "expected -50%, got {delta_worse}"
    );

    let other_seed = report_with("pit", 4, &[0.05, 0.15]);
    assert!(matches!(
        compare(&base, &other_seed),
        Err(Error::NotComparable(_))
    ));
    let other_count = report_with("pit", 3, &[0.05, 0.15, 0.2]);
    assert!(matches!(
        compare(&base, &other_count),
        Err(Error::NotComparable(_))
    ));
    let zero_base = report_with("kriging", 3, &[0.0, 0.0]);
    assert!(matches!(
        compare(&zero_base, &better),
        Err(Error::NotComparable(_))
    ));

    println!("acceptance: comparison delta matches definition ({delta:+.1}% / {delta_worse:+.1}%)");
}

#[test]
fn gradients_match_finite_differences() {
    let started = Instant::now();
    let cfg = PitConfig::tiny();
    let weights = PitWeights::<f32>::init(&cfg, 11).convert::<f64>();

    let known = [
        KnownPoint { row: 1, col: 2, value: 0.15 },
        KnownPoint { row: 3, col: 9, value: 0.62 },
        KnownPoint { row: 7, col: 4, value: 0.38 },
        KnownPoint { row: 10, col: 11, value: 0.91 },
    ];
    let query = [
        QueryPoint { row: 0, col: 7, truth: 0.3 },
        QueryPoint { row: 6, col: 1, truth: 0.7 },
        QueryPoint { row: 11, col: 5, truth: 0.45 },
    ];
    let task = MapTask {
        h: 12,
        w: 12,
        known: &known,
        query: &query,
    };

    let report = gradient_check(&weights, &cfg, &task, 1e-4, 1e-8).unwrap();
    let elapsed = started.elapsed().as_secs_f64();
    assert!(
        report.max_rel_err < 1e-3,
        "worst parameter {} at relative error {:.3e}",
        report.worst,
        report.max_rel_err
    );
    assert!(
        report.n_checked > report.n_skipped,
        "too few informative parameters: {} checked, {} skipped",
        report.n_checked,
        report.n_skipped
    );
    assert!(elapsed < 60.0, "gradient check took {elapsed:.1}s");
    println!(
        "acceptance: gradients match finite differences (max rel err {:.3e} over {} params, {elapsed:.1}s)",
        report.max_rel_err, report.n_checked
    );
}

#[test]
fn optimizer_steps_match_reference_arithmetic() {
    let cfg = PitConfig::tiny();
    let start = PitWeights::<f32>::init(&cfg, 3).convert::<f64>();

    // One descent step on a real loss gradient must satisfy
    // next - prev + eta * grad = 0 component-wise, in f64.
    let known: Vec<KnownPoint> = (0..6)
        .map(|i| KnownPoint {
            row: i,
            col: (i * 5 + 2) % 10,
            value: 0.1 + 0.12 * i as f64,
        })
        .collect();
    let query = [
        QueryPoint { row: 7, col: 1, truth: 0.4 },
        QueryPoint { row: 8, col: 6, truth: 0.7 },
    ];
    let task = MapTask {
        h: 10,
        w: 10,
        known: &known,
        query: &query,
    };
    let state = forward_loss(&start, &cfg, &task).unwrap();
    let grads = backward(&start, &cfg, &task, &state).unwrap();
    let g = grads.flatten();
    let eta = 0.37;
    let mut sgd_weights = start.clone();
    sgd_step(&mut sgd_weights, &grads, eta);
    let sgd_err = sgd_weights
        .flatten()
        .iter()
        .zip(&start.flatten())
        .zip(&g)
        .map(|((next, prev), gi)| (next - prev + eta * gi).abs())
        .fold(0.0f64, f64::max);
    assert!(sgd_err <= 1e-12, "descent step drifted from -eta*grad by {sgd_err:.3e}");

    // Two Adam steps against an independent scalar replay of the recurrence.
    let mut adam_weights = start.clone();
    let mut state = AdamState::new(start.n_params());
    adam_step(&mut adam_weights, &grads, &mut state, 0.01, 0.02);
    adam_step(&mut adam_weights, &grads, &mut state, 0.005, 0.02);
    let mut expect = start.flatten();
    let mut m = vec![0.0f64; g.len()];
    let mut v = vec![0.0f64; g.len()];
    for step in 1..=2u32 {
        let rate = if step == 1 { 0.01 } else { 0.005 };
        let bc1 = 1.0 - ADAM_BETA1.powi(step as i32);
        let bc2 = 1.0 - ADAM_BETA2.powi(step as i32);
        for i in 0..g.len() {
            m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g[i];
            v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            expect[i] -= rate * (m_hat / (v_hat.sqrt() + ADAM_EPS) + 0.02 * expect[i]);
        }
    }
    let adam_err = adam_weights
        .flatten()
        .iter()
        .zip(&expect)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    assert!(adam_err <= 1e-12, "adam drifted from the recurrence by {adam_err:.3e}");

    // A zero-rate adaptation stream must not move a single bit, and must
    // score each task exactly as a fresh forward pass would.
    let weights_f32 = PitWeights::<f32>::init(&cfg, 3);
    let tasks = vec![
        MapTask { h: 10, w: 10, known: &known[..4], query: &query },
        MapTask { h: 10, w: 10, known: &known[2..], query: &query[..1] },
    ];
    let frozen = TtaConfig {
        eta: 0.0,
        optimizer: TtaOptimizer::Adam,
    };
    let mut streamed = weights_f32.clone();
    let outcome = adapt_stream(&mut streamed, &cfg, &frozen, &tasks).unwrap();
    let before: Vec<u32> = weights_f32.flatten().iter().map(|w| w.to_bits()).collect();
    let after: Vec<u32> = streamed.flatten().iter().map(|w| w.to_bits()).collect();
    assert_eq!(before, after, "zero-rate stream changed weight bits");
    for (task, &scored) in tasks.iter().zip(&outcome.rmse) {
        let solo = forward_loss(&weights_f32, &cfg, task).unwrap();
        assert_eq!(scored, solo.loss as f64, "stream score differs from a solo forward");
    }

    println!(
        "acceptance: optimizer steps match reference arithmetic (sgd err {sgd_err:.1e}, adam err {adam_err:.1e}, frozen stream bit-stable)"
    );
}

#[test]
fn pretraining_overfits_a_small_corpus() {
    let started = Instant::now();
    let synth = SynthConfig {
        n_buildings: 6,
        seed: 101,
        ..SynthConfig::default()
    };
    let maps: Vec<RadioMap> = generate_dataset(&synth, 8)
        .unwrap()
        .into_iter()
        .map(|s| s.map)
        .collect();

    // 200 optimizer steps at the default mask sizes and learning rate:
    // all 8 maps per batch, so one step per epoch.
    let cfg = small_model();
    let mut weights = PitWeights::<f32>::init(&cfg, 7);
    let tc = TrainConfig {
        epochs: 200,
        batch_size: 8,
        lr: 1e-4,
        weight_decay: 0.0,
        n_known: 50,
        n_query: 1500,
        seed: 5,
    };
    let report = pretrain(&mut weights, &cfg, &maps, &tc).unwrap();
    let elapsed = started.elapsed().as_secs_f64();

    assert_eq!(report.steps, 200);
    let first = report.epoch_losses[0];
    let last = *report.epoch_losses.last().unwrap();
    assert!(
        last < 0.5 * first,
        "loss only went {first:.4} -> {last:.4} over {} steps",
        report.steps
    );
    assert!(elapsed < 300.0, "overfit run took {elapsed:.0}s");
    println!(
        "acceptance: pretraining overfits a small corpus (RMSE {first:.4} -> {last:.4} in {} steps, {elapsed:.1}s)",
        report.steps
    );
}

#[test]
fn adaptation_descends_under_distribution_shift() {
    let started = Instant::now();

    // Source domain: gentle path loss, thin walls.
    let source = SynthConfig {
        h: 32,
        w: 32,
        n_buildings: 6,
        n_exp: 2.0,
        wall_loss: 0.05,
        seed: 201,
        ..SynthConfig::default()
    };
    let maps: Vec<RadioMap> = generate_dataset(&source, 16)
        .unwrap()
        .into_iter()
        .map(|s| s.map)
        .collect();
    let cfg = small_model();
    let mut weights = PitWeights::<f32>::init(&cfg, 9);
    let tc = TrainConfig {
        epochs: 30,
        batch_size: 8,
        lr: 3e-3,
        weight_decay: 0.0,
        n_known: 40,
        n_query: 200,
        seed: 13,
    };
    pretrain(&mut weights, &cfg, &maps, &tc).unwrap();

    // Shifted domain: steeper decay, walls 50% lossier. One stream of 32
    // scenes, 20 measured points each (split 13 known / 7 scored).
    let shifted = SynthConfig {
        n_exp: 3.0,
        wall_loss: source.wall_loss * 1.5,
        seed: 301,
        ..source
    };
    let scenes: Vec<(String, Scene)> = generate_dataset(&shifted, 32)
        .unwrap()
        .iter()
        .enumerate()
        .map(|(i, truth)| {
            let scene = sample_scene(truth, 20, 500 + i as u64, &band(), &norm()).unwrap();
            (format!("shift-{i:02}"), scene)
        })
        .collect();

    let tta = TtaConfig {
        eta: 5e-6,
        optimizer: TtaOptimizer::Adam,
    };
    let mut wins = 0;
    let mut lines = Vec::new();
    for seed in 0..5u64 {
        let frozen = evaluate(
            &scenes,
            &Evaluator::Pit {
                weights: &weights,
                cfg: &cfg,
            },
            seed,
        )
        .unwrap();
        let adapted = evaluate(
            &scenes,
            &Evaluator::PitTta {
                weights: &weights,
                cfg: &cfg,
                tta: &tta,
            },
            seed,
        )
        .unwrap();
        if adapted.aggregate.mean < frozen.aggregate.mean {
            wins += 1;
        }
        lines.push(format!(
            "seed {seed}: frozen {:.4} vs adapted {:.4}",
            frozen.aggregate.mean, adapted.aggregate.mean
        ));
    }
    let elapsed = started.elapsed().as_secs_f64();
    for line in &lines {
        println!("  {line}");
    }
    assert!(
        wins >= 3,
        "adaptation beat the frozen model on only {wins}/5 seeds:\n{}",
        lines.join("\n")
    );
    println!(
        "acceptance: adaptation descends under distribution shift ({wins}/5 seeds, {elapsed:.1}s)"
    );
}

#[test]
fn kriging_interpolates_and_matches_hand_solutions() {
    // Predicting at a sample's own location returns that sample's value.
    let synth = SynthConfig {
        h: 32,
        w: 32,
        seed: 401,
        ..SynthConfig::default()
    };
    let truth = &generate_dataset(&synth, 1).unwrap()[0];
    let scene = sample_scene(truth, 40, 77, &band(), &norm()).unwrap();
    let points: Vec<KnownPoint> = scene
        .points
        .iter()
        .map(|p| KnownPoint {
            row: p.row,
            col: p.col,
            value: p.value,
        })
        .collect();
    let model = fit_scene_model(&points, 32, 32, VariogramKind::Exponential);
    let mut worst = 0.0f64;
    for opts in [KrigeOpts { knn: None }, KrigeOpts { knn: Some(12) }] {
        for p in &points {
            let (pred, _) =
                krige_predict(&points, &model, (p.row as f64, p.col as f64), &opts).unwrap();
            worst = worst.max((pred - p.value).abs());
        }
    }
    assert!(worst <= 1e-6, "interpolation error {worst:.3e} at a sample");

    // Two symmetric layouts whose weights are forced by geometry alone, so
    // the expected value is known by hand for any variogram shape.
    let kinds = [
        VariogramKind::Exponential,
        VariogramKind::Spherical,
        VariogramKind::Gaussian,
    ];
    let mut worst_hand = 0.0f64;
    for kind in kinds {
        let model = VariogramModel {
            kind,
            nugget: 0.01,
            sill: 0.3,
            range: 5.0,
        };
        // Midpoint of two samples: both weights are 1/2, so the prediction
        // is (0.2 + 0.8) / 2 = 0.5.
        let pair = [
            KnownPoint { row: 0, col: 0, value: 0.2 },
            KnownPoint { row: 0, col: 4, value: 0.8 },
        ];
        let (pred, _) = krige_predict(&pair, &model, (0.0, 2.0), &KrigeOpts::default()).unwrap();
        worst_hand = worst_hand.max((pred - 0.5).abs());

        // Four samples on a ring around the query; a quarter turn permutes
        // them without changing any distance, so every weight is 1/4 and the
        // prediction is the plain mean (0.1 + 0.3 + 0.5 + 0.9) / 4 = 0.45.
        let ring = [
            KnownPoint { row: 0, col: 1, value: 0.1 },
            KnownPoint { row: 1, col: 0, value: 0.3 },
            KnownPoint { row: 1, col: 2, value: 0.5 },
            KnownPoint { row: 2, col: 1, value: 0.9 },
        ];
        let (pred, _) = krige_predict(&ring, &model, (1.0, 1.0), &KrigeOpts::default()).unwrap();
        worst_hand = worst_hand.max((pred - 0.45).abs());

        // Pure nugget (sill == nugget): the semivariance is flat away from
        // zero lag, so every off-sample query weights all samples equally
        // and predicts their mean, (0.2 + 0.5 + 0.8 + 0.9) / 4 = 0.6.
        let flat = VariogramModel {
            kind,
            nugget: 0.07,
            sill: 0.07,
            range: 3.0,
        };
        let scattered = [
            KnownPoint { row: 0, col: 0, value: 0.2 },
            KnownPoint { row: 2, col: 7, value: 0.5 },
            KnownPoint { row: 5, col: 1, value: 0.8 },
            KnownPoint { row: 9, col: 4, value: 0.9 },
        ];
        let (pred, _) =
            krige_predict(&scattered, &flat, (4.0, 5.0), &KrigeOpts::default()).unwrap();
        worst_hand = worst_hand.max((pred - 0.6).abs());
    }
    assert!(
        worst_hand <= 1e-9,
        "hand-solvable layouts disagree by {worst_hand:.3e}"
    );
    println!(
        "acceptance: kriging interpolates and matches hand solutions (exactness {worst:.1e}, hand {worst_hand:.1e})"
    );
}

#[test]
fn artifacts_round_trip_byte_exact() {
    let dir = tempfile::tempdir().unwrap();
    let synth = SynthConfig {
        h: 16,
        w: 16,
        n_buildings: 3,
        seed: 501,
        ..SynthConfig::default()
    };
    let truth = &generate_dataset(&synth, 1).unwrap()[0];
    let scene = sample_scene(truth, 30, 88, &band(), &norm()).unwrap();

    let s1 = dir.path().join("a.rmsc");
    let s2 = dir.path().join("b.rmsc");
    save_scene(&s1, &scene).unwrap();
    let loaded = load_scene(&s1).unwrap();
    assert_eq!(loaded, scene);
    save_scene(&s2, &loaded).unwrap();
    assert_eq!(std::fs::read(&s1).unwrap(), std::fs::read(&s2).unwrap());

    let m1 = dir.path().join("a.rmap");
    let m2 = dir.path().join("b.rmap");
    save_map(&m1, &truth.map).unwrap();
    let loaded_map = load_map(&m1).unwrap();
    assert_eq!(loaded_map, truth.map);
    save_map(&m2, &loaded_map).unwrap();
    assert_eq!(std::fs::read(&m1).unwrap(), std::fs::read(&m2).unwrap());

    let cfg = PitConfig::tiny();
    let weights = PitWeights::<f32>::init(&cfg, 77);
    let c1 = dir.path().join("a.rptw");
    let c2 = dir.path().join("b.rptw");
    save_weights(&c1, &cfg, &weights).unwrap();
    let (cfg_back, weights_back) = load_weights(&c1).unwrap();
    assert_eq!(cfg_back, cfg);
    let bits = |w: &PitWeights<f32>| -> Vec<u32> { w.flatten().iter().map(|v| v.to_bits()).collect() };
    assert_eq!(bits(&weights_back), bits(&weights));
    save_weights(&c2, &cfg_back, &weights_back).unwrap();
    assert_eq!(std::fs::read(&c1).unwrap(), std::fs::read(&c2).unwrap());

    // The generators themselves replay exactly from their seeds.
    let again: Vec<SynthMap> = generate_dataset(&synth, 1).unwrap();
    assert_eq!(again[0], *truth);
    let maps: Vec<RadioMap> = generate_dataset(&synth, 2)
        .unwrap()
        .into_iter()
        .map(|s| s.map)
        .collect();
    let tc = TrainConfig {
        epochs: 2,
        batch_size: 2,
        lr: 1e-3,
        weight_decay: 0.0,
        n_known: 10,
        n_query: 60,
        seed: 21,
    };
    let mut run_a = PitWeights::<f32>::init(&cfg, 5);
    let mut run_b = PitWeights::<f32>::init(&cfg, 5);
    pretrain(&mut run_a, &cfg, &maps, &tc).unwrap();
    pretrain(&mut run_b, &cfg, &maps, &tc).unwrap();
    assert_eq!(bits(&run_a), bits(&run_b), "training replay diverged");

    // And the adaptation stage replays too: same scenes, weights, and seed
    // give the same report bytes and the same adapted weights.
    let scenes = vec![("only".to_string(), scene)];
    let tta = TtaConfig {
        eta: 1e-4,
        optimizer: TtaOptimizer::Adam,
    };
    let (rep_a, adapted_a) = adapt_and_report(&scenes, &run_a, &cfg, &tta, 2).unwrap();
    let (rep_b, adapted_b) = adapt_and_report(&scenes, &run_a, &cfg, &tta, 2).unwrap();
    assert_eq!(report_json(&rep_a).unwrap(), report_json(&rep_b).unwrap());
    assert_eq!(bits(&adapted_a), bits(&adapted_b), "adaptation replay diverged");

    println!("acceptance: artifacts round trip byte-exact (scene, map, checkpoint, replays)");
}

#[test]
fn split_protocol_counts_hold_for_all_sizes() {
    let synth = SynthConfig {
        h: 16,
        w: 16,
        n_buildings: 3,
        seed: 601,
        ..SynthConfig::default()
    };
    let truth = &generate_dataset(&synth, 1).unwrap()[0];
    for n in 10..=100usize {
        let scene = sample_scene(truth, n, 600 + n as u64, &band(), &norm()).unwrap();
        let id = format!("scene-{n}");
        let split = scene_split(&scene, &id, 42).unwrap();
        // Restated protocol: two thirds of the points, rounded half away
        // from zero, are revealed; every remaining point is scored.
        let expect_known = (2.0 * n as f64 / 3.0).round() as usize;
        assert_eq!(split.known.len(), expect_known, "known count at n={n}");
        assert_eq!(split.query.len(), n - expect_known, "query count at n={n}");
        split.validate(16, 16).unwrap();
        let replay = scene_split(&scene, &id, 42).unwrap();
        assert_eq!(replay, split, "split not a pure function of (scene, id, seed) at n={n}");
    }

    // Training masks at the default sizes: 50 revealed, 1500 scored, disjoint.
    let big = SynthConfig {
        n_buildings: 5,
        seed: 602,
        ..SynthConfig::default()
    };
    let full = &generate_dataset(&big, 1).unwrap()[0];
    let cands = map_candidates(&full.map);
    let mask = mask_generate(&cands, 50, 1500, 77).unwrap();
    assert_eq!(mask.known.len(), 50);
    assert_eq!(mask.query.len(), 1500);
    mask.validate(full.map.h, full.map.w).unwrap();

    println!("acceptance: split protocol counts hold for all sizes (n in 10..=100, masks 50/1500)");
}

#[test]
fn decoding_is_chunk_and_order_invariant() {
    let base = PitConfig::tiny();
    let fine = PitConfig {
        decode_chunk: 3,
        ..base
    };
    let coarse = PitConfig {
        decode_chunk: 1000,
        ..base
    };
    let (h, w) = (20usize, 20usize);
    let mut worst_chunk = 0.0f64;
    let mut worst_perm = 0.0f64;
    for case in 0..20u64 {
        // Gate the invariances in f64, where summation noise sits far below
        // the tolerance instead of at it; the f32 path additionally proves
        // chunking bit-exact, since chunk size never reorders arithmetic.
        let weights32 = PitWeights::<f32>::init(&base, 900 + case);
        let weights = weights32.convert::<f64>();
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + case);
        let picked = rand::seq::index::sample(&mut rng, h * w, 25);
        let known: Vec<KnownPoint> = picked
            .iter()
            .take(15)
            .map(|idx| KnownPoint {
                row: idx / w,
                col: idx % w,
                value: rng.gen::<f64>(),
            })
            .collect();
        let coords: Vec<(usize, usize)> = picked.iter().skip(15).map(|i| (i / w, i % w)).collect();

        let a = predict_values(&weights, &fine, &known, &coords, h, w).unwrap();
        let b = predict_values(&weights, &coarse, &known, &coords, h, w).unwrap();
        for (x, y) in a.iter().zip(&b) {
            worst_chunk = worst_chunk.max((x - y).abs());
        }
        let a32 = predict_values(&weights32, &fine, &known, &coords, h, w).unwrap();
        let b32 = predict_values(&weights32, &coarse, &known, &coords, h, w).unwrap();
        let bits = |v: &[f32]| v.iter().map(|p| p.to_bits()).collect::<Vec<u32>>();
        assert_eq!(bits(&a32), bits(&b32), "f32 chunked decode is not bit-exact");

        let mut reversed = known.clone();
        reversed.reverse();
        let c = predict_values(&weights, &coarse, &reversed, &coords, h, w).unwrap();
        for (x, y) in b.iter().zip(&c) {
            worst_perm = worst_perm.max((x - y).abs());
        }
    }
    assert!(worst_chunk <= 1e-6, "chunked decode drifted by {worst_chunk:.3e}");
    assert!(worst_perm <= 1e-6, "known-point order moved predictions by {worst_perm:.3e}");
    println!(
        "acceptance: decoding is chunk and order invariant (chunk {worst_chunk:.1e}, order {worst_perm:.1e} over 20 cases)"
    );
}
