//! Acceptance suite: one test per shipped guarantee, each printing a
//! pass/fail line. Run with `cargo test -p histomil-cli --test acceptance`
//! (add `-- --nocapture` to see the lines for passing tests too).

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use histomil::autograd::Tensor;
use histomil::mil::{
    forward_bag, forward_bag_embeddings, load_checkpoint, save_checkpoint, tile_to_tensor, Bag,
    MilModel, ModelConfig, TrainConfig,
};
use histomil::shape::{shape_descriptors, Region};
use histomil::signature::{
    parse_gmt, signature_scores, stratify, ExpressionMatrix, SampleLabel, StratifyMode, TissueClass,
};
use histomil::slide::{RgbImage, TileManifest};
use histomil::stats::{
    make_splits, mann_whitney, mann_whitney_approx, mann_whitney_exact, roc_auc,
};
use histomil::texture::{glcm, glcm_features, to_gray, Angle, GrayTile, GRAY_LEVELS};
use histomil_cli::commands::eval::run_protocol;
use histomil_cli::commands::gradcheck::check_seeds;
use histomil_cli::config::PipelineConfig;
use histomil_cli::synth::{generate, SynthSpec};
use histomil_cli::tables::read_labels;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn workdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("histomil_acceptance").join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

/// Weak labels via the expression path, checked against generator truth.
fn labels_from_expression(data: &std::path::Path) -> Vec<SampleLabel> {
    let expr =
        ExpressionMatrix::from_tsv(fs::File::open(data.join("expression.tsv")).unwrap()).unwrap();
    let sets = parse_gmt(fs::File::open(data.join("signature.gmt")).unwrap()).unwrap();
    let scores = signature_scores(&expr, &sets[0]).unwrap();
    stratify(&scores, StratifyMode::MedianSplit).unwrap()
}

#[test]
fn criterion_1_synthetic_protocol_reaches_high_auc_within_time() {
    let dir = workdir("c1");
    let spec = SynthSpec {
        samples: 200,
        tiles_per_sample: 20,
        tile_size: 64,
        seed: 11,
    };
    generate(&spec, &dir).unwrap();
    let labels = labels_from_expression(&dir);
    assert_eq!(labels.len(), 200);

    let config = PipelineConfig {
        seed: 1,
        model: ModelConfig::synthetic_benchmark(),
        train: TrainConfig::default(), // lr 3e-4, 100 epochs, bag 20
        ..Default::default()
    };
    let manifest = TileManifest::load(&dir.join("manifest.csv")).unwrap();

    let started = Instant::now();
    let outcome =
        run_protocol(&config, &manifest, &labels, 3, 1.0 / 3.0, &dir.join("eval")).unwrap();
    let elapsed = started.elapsed().as_secs_f64();

    assert!(
        outcome.mean_auc >= 0.95,
        "mean AUC {:.4} (per repeat {:?})",
        outcome.mean_auc,
        outcome.aucs
    );
    assert!(
        elapsed <= 600.0,
        "protocol took {elapsed:.0}s, budget is 600s"
    );
    // 200 samples at a third per class: 33 + 33 test samples per repeat
    assert_eq!(outcome.confusion.total(), 66);
    println!(
        "acceptance criterion 1: PASS (mean AUC {:.4} +- {:.4} over {:?} in {elapsed:.0}s)",
        outcome.mean_auc, outcome.sd_auc, outcome.aucs
    );
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn criterion_2_full_model_gradient_check_across_20_seeds() {
    let started = Instant::now();
    let results = check_seeds(20, 1e-4, 100).unwrap();
    let elapsed = started.elapsed().as_secs_f64();
    let worst = results
        .iter()
        .map(|r| r.max_rel_error)
        .fold(0.0f64, f64::max);
    assert!(
        results.iter().all(|r| r.passed),
        "worst relative error {worst:.3e}"
    );
    assert!(worst < 1e-4);
    assert!(
        elapsed <= 60.0,
        "gradient checks took {elapsed:.1}s, budget is 60s"
    );
    println!(
        "acceptance criterion 2: PASS (20 seeds, worst relative error {worst:.3e}, {elapsed:.1}s)"
    );
}

#[test]
fn criterion_3_glcm_matches_brute_force_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let mut max_feature_err = 0.0f64;
    for _ in 0..100 {
        let h = rng.random_range(2..=64);
        let w = rng.random_range(2..=64);
        let tile = GrayTile::new(
            h,
            w,
            (0..h * w).map(|_| rng.random_range(0..=255u8)).collect(),
        )
        .unwrap();

        let mut expected = [0.0f64; 6];
        for angle in Angle::ALL {
            // brute-force ordered-pair enumeration
            let (dr, dc) = angle.offset();
            let mut counts = vec![0u64; GRAY_LEVELS * GRAY_LEVELS];
            let mut total = 0u64;
            for r in 0..h as isize {
                for c in 0..w as isize {
                    let (nr, nc) = (r + dr, c + dc);
                    if nr >= 0 && nr < h as isize && nc >= 0 && nc < w as isize {
                        counts[tile.at(r as usize, c as usize) as usize * GRAY_LEVELS
                            + tile.at(nr as usize, nc as usize) as usize] += 1;
                        total += 1;
                    }
                }
            }
            let m = glcm(&tile, angle).unwrap();
            for (i, &c) in counts.iter().enumerate() {
                assert_eq!(
                    m.entries()[i],
                    c as f64 / total as f64,
                    "count mismatch at {i}"
                );
            }
            // direct-summation feature evaluation on the normalized matrix
            let p = m.entries();
            let n = GRAY_LEVELS;
            let mut homogeneity = 0.0;
            let mut asm = 0.0;
            let mut contrast = 0.0;
            let mut dissim = 0.0;
            let mut mu_i = 0.0;
            let mut mu_j = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let v = p[i * n + j];
                    let d = i as f64 - j as f64;
                    homogeneity += v / (1.0 + d * d);
                    asm += v * v;
                    contrast += v * d * d;
                    dissim += v * d.abs();
                    mu_i += i as f64 * v;
                    mu_j += j as f64 * v;
                }
            }
            let mut var_i = 0.0;
            let mut var_j = 0.0;
            let mut cov = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let v = p[i * n + j];
                    var_i += v * (i as f64 - mu_i).powi(2);
                    var_j += v * (j as f64 - mu_j).powi(2);
                    cov += v * (i as f64 - mu_i) * (j as f64 - mu_j);
                }
            }
            let sigma = (var_i * var_j).sqrt();
            let corr = if sigma == 0.0 { 1.0 } else { cov / sigma };
            for (e, v) in
                expected
                    .iter_mut()
                    .zip([homogeneity, asm.sqrt(), corr, contrast, dissim, asm])
            {
                *e += 0.25 * v;
            }
        }
        let got = glcm_features(&tile).unwrap().as_array();
        for (g, e) in got.iter().zip(expected.iter()) {
            max_feature_err = max_feature_err.max((g - e).abs());
            assert!((g - e).abs() < 1e-9, "{g} vs {e}");
        }
    }
    println!(
        "acceptance criterion 3: PASS (100 tiles exact counts, feature deviation <= {max_feature_err:.2e})"
    );
}

#[test]
fn criterion_4_morphometry_fixtures() {
    // rasterized disk of radius 50
    let disk: Vec<(u32, u32)> = {
        let mut px = Vec::new();
        for r in -52i64..=52 {
            for c in -52i64..=52 {
                if r * r + c * c <= 50 * 50 {
                    px.push(((r + 52) as u32, (c + 52) as u32));
                }
            }
        }
        px
    };
    let p = shape_descriptors(&Region {
        id: 1,
        pixels: disk,
    })
    .unwrap();
    assert!(
        p.eccentricity < 0.05,
        "disk eccentricity {}",
        p.eccentricity
    );
    let circ = p.circularity.unwrap();
    assert!((0.9..=1.1).contains(&circ), "disk circularity {circ}");
    let extent_err = (p.extent - std::f64::consts::PI / 4.0).abs();
    assert!(
        extent_err < 0.02,
        "disk extent {} (err {extent_err})",
        p.extent
    );
    assert!(p.solidity.unwrap() > 0.98, "disk solidity {:?}", p.solidity);

    // axis-aligned rectangle: exact extent, analytic moment eccentricity
    let (h, w) = (13u32, 37u32);
    let rect: Vec<(u32, u32)> = (0..h).flat_map(|r| (0..w).map(move |c| (r, c))).collect();
    let q = shape_descriptors(&Region {
        id: 2,
        pixels: rect,
    })
    .unwrap();
    assert_eq!(q.extent, 1.0);
    let var = |k: f64| (k * k - 1.0) / 12.0;
    let analytic = {
        let major = 4.0 * var(w as f64).sqrt();
        let minor = 4.0 * var(h as f64).sqrt();
        (1.0 - (minor * minor) / (major * major)).sqrt()
    };
    assert!(
        (q.eccentricity - analytic).abs() < 1e-3,
        "rectangle eccentricity {} vs analytic {analytic}",
        q.eccentricity
    );
    println!(
        "acceptance criterion 4: PASS (disk ecc {:.3}, circ {circ:.3}, extent err {extent_err:.4}, solidity {:.4}; rectangle exact)",
        p.eccentricity,
        p.solidity.unwrap()
    );
}

#[test]
fn criterion_5_rank_statistics_oracles() {
    // AUC equals brute-force pairwise counting on every input up to n = 50
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    for _ in 0..300 {
        let n = rng.random_range(2..=50);
        let n_pos = rng.random_range(1..n);
        let labels: Vec<bool> = (0..n).map(|i| i < n_pos).collect();
        let scores: Vec<f64> = (0..n)
            .map(|_| (rng.random_range(0..10) as f64) / 9.0)
            .collect();
        let auc = roc_auc(&scores, &labels).unwrap();
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for i in 0..n {
            for j in 0..n {
                if labels[i] && !labels[j] {
                    pairs += 1.0;
                    wins += if scores[i] > scores[j] {
                        1.0
                    } else if scores[i] == scores[j] {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        assert_eq!(auc, wins / pairs);
    }

    // pinned exact p-value
    let r = mann_whitney(&[1.0, 2.0, 3.0], &[10.0, 11.0, 12.0]).unwrap();
    assert_eq!(r.u, 0.0);
    assert!((r.p - 0.1).abs() < 1e-12, "exact p {}", r.p);

    // exact vs approximate agreement at 15 x 15, tie-free
    let mut worst_gap = 0.0f64;
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(5500 + seed);
        let mut pool = Vec::new();
        while pool.len() < 30 {
            let v: f64 = rng.random_range(-5.0..5.0);
            if !pool.contains(&v) {
                pool.push(v);
            }
        }
        let shift = rng.random_range(-1.5..1.5);
        let xs = pool[..15].to_vec();
        let ys: Vec<f64> = pool[15..].iter().map(|v| v + shift).collect();
        let exact = mann_whitney_exact(&xs, &ys).unwrap().p;
        let approx = mann_whitney_approx(&xs, &ys).unwrap().p;
        worst_gap = worst_gap.max((exact - approx).abs());
        assert!(
            (exact - approx).abs() < 0.01,
            "exact {exact} vs approx {approx}"
        );
    }
    println!(
        "acceptance criterion 5: PASS (pairwise AUC exact on 300 cases, pinned p = 0.1, exact/approx gap <= {worst_gap:.4})"
    );
}

#[test]
fn criterion_6_protocol_fidelity_on_the_240_sample_mock() {
    // balanced 240-sample mock expression matrix: signature genes shifted
    // up in half the samples
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let sample_ids: Vec<String> = (0..240).map(|i| format!("M{i:03}")).collect();
    let mut gene_ids = Vec::new();
    let mut values = Vec::new();
    for g in 0..8 {
        gene_ids.push(format!("SIG_{g}"));
        for i in 0..240 {
            let shift = if i % 2 == 0 { 5.0 } else { 0.0 };
            values.push(2.0 + shift + rng.random_range(-0.4..0.4));
        }
    }
    let expr = ExpressionMatrix::new(gene_ids.clone(), sample_ids.clone(), values).unwrap();
    let set = histomil::signature::GeneSet {
        name: "MOCK".into(),
        genes: gene_ids.into_iter().collect(),
    };
    let scores = signature_scores(&expr, &set).unwrap();
    let labels = stratify(&scores, StratifyMode::MedianSplit).unwrap();
    let hypoxic = labels
        .iter()
        .filter(|l| l.label == TissueClass::Hypoxic)
        .count();
    assert_eq!(hypoxic, 120, "median split must give 120/120");
    assert_eq!(labels.len(), 240);
    for l in &labels {
        let idx: usize = l.sample_id[1..].parse().unwrap();
        assert_eq!(
            l.label == TissueClass::Hypoxic,
            idx.is_multiple_of(2),
            "sample {}",
            l.sample_id
        );
    }

    // three stratified random splits with n = 80 test samples, 40 per class
    let pairs: Vec<(String, bool)> = labels
        .iter()
        .map(|l| (l.sample_id.clone(), l.label == TissueClass::Hypoxic))
        .collect();
    let plans = make_splits(&pairs, 3, 1.0 / 3.0, 99).unwrap();
    assert_eq!(plans.len(), 3);
    for plan in &plans {
        assert_eq!(plan.test.len(), 80);
        assert_eq!(plan.train.len(), 160);
        let test_pos = plan
            .test
            .iter()
            .filter(|id| pairs.iter().any(|(s, c)| s == *id && *c))
            .count();
        assert_eq!(test_pos, 40, "repeat {} class balance", plan.repeat);
    }
    println!("acceptance criterion 6: PASS (120/120 stratification, 3 splits of n=80 at 40/40)");
}

#[test]
fn criterion_7_texture_direction_after_confident_tile_scoring() {
    let dir = workdir("c7");
    let spec = SynthSpec {
        samples: 60,
        tiles_per_sample: 20,
        tile_size: 64,
        seed: 21,
    };
    generate(&spec, &dir).unwrap();
    let labels = labels_from_expression(&dir);
    let manifest = TileManifest::load(&dir.join("manifest.csv")).unwrap();

    // a hotter learning rate saturates the tile probabilities so the 0.9
    // confidence threshold actually selects tiles; the threshold is the
    // pinned part of this check, the training recipe is not
    let train_config = TrainConfig {
        seed: 2,
        epochs: 50,
        learning_rate: 0.03,
        ..Default::default()
    };
    let outcome = histomil::mil::train(
        &ModelConfig::synthetic_benchmark(),
        &train_config,
        &manifest,
        &labels,
    )
    .unwrap();

    // singleton-bag scoring at the 0.9 confidence threshold
    let mut hypoxic_homogeneity = Vec::new();
    let mut normoxic_homogeneity = Vec::new();
    for sample in manifest.sample_ids() {
        let records = manifest.tiles_of(&sample);
        let tensors: Vec<Tensor<f32>> = records
            .iter()
            .map(|r| tile_to_tensor(&RgbImage::load(&r.path).unwrap()))
            .collect();
        for kept in histomil::mil::score_single_tiles(&outcome.model, &tensors, 0.9).unwrap() {
            let img = RgbImage::load(&records[kept.tile_index].path).unwrap();
            let gray = to_gray(img.height(), img.width(), img.pixels()).unwrap();
            let h = glcm_features(&gray).unwrap().homogeneity;
            match kept.class {
                TissueClass::Hypoxic => hypoxic_homogeneity.push(h),
                TissueClass::Normoxic => normoxic_homogeneity.push(h),
            }
        }
    }
    assert!(
        hypoxic_homogeneity.len() >= 10 && normoxic_homogeneity.len() >= 10,
        "confident tiles: {} hypoxic, {} normoxic",
        hypoxic_homogeneity.len(),
        normoxic_homogeneity.len()
    );
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(
        mean(&hypoxic_homogeneity) < mean(&normoxic_homogeneity),
        "hypoxic homogeneity {} should be below normoxic {}",
        mean(&hypoxic_homogeneity),
        mean(&normoxic_homogeneity)
    );
    let test = mann_whitney(&hypoxic_homogeneity, &normoxic_homogeneity).unwrap();
    assert!(test.p < 0.01, "Mann-Whitney p {}", test.p);
    println!(
        "acceptance criterion 7: PASS ({} vs {} confident tiles, homogeneity {:.4} < {:.4}, p {:.2e})",
        hypoxic_homogeneity.len(),
        normoxic_homogeneity.len(),
        mean(&hypoxic_homogeneity),
        mean(&normoxic_homogeneity),
        test.p
    );
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn criterion_8_determinism_and_checkpoint_persistence() {
    let dir = workdir("c8");
    let spec = SynthSpec {
        samples: 12,
        tiles_per_sample: 6,
        tile_size: 32,
        seed: 5,
    };
    generate(&spec, &dir.join("data")).unwrap();
    let labels = read_labels(&{
        let labels = labels_from_expression(&dir.join("data"));
        let p = dir.join("labels.csv");
        histomil_cli::tables::write_labels(&labels, &p).unwrap();
        p
    })
    .unwrap();
    let manifest = TileManifest::load(&dir.join("data/manifest.csv")).unwrap();

    let config = PipelineConfig {
        seed: 7,
        model: ModelConfig {
            backbone: vec![3, 6],
            feature_dim: 6,
            attention_hidden: 8,
            head_hidden: 8,
            n_classes: 2,
            tile_size: 32,
        },
        train: TrainConfig {
            epochs: 3,
            bag_size: 4,
            seed: 7,
            ..Default::default()
        },
        ..Default::default()
    };

    // identical seeds reproduce every artifact byte for byte
    let out_a = dir.join("run_a");
    let out_b = dir.join("run_b");
    run_protocol(&config, &manifest, &labels, 2, 1.0 / 3.0, &out_a).unwrap();
    run_protocol(&config, &manifest, &labels, 2, 1.0 / 3.0, &out_b).unwrap();
    for name in [
        "metrics.csv",
        "loss_log_r1.csv",
        "loss_log_r2.csv",
        "model_r1.hxnc",
        "model_r2.hxnc",
        "splits.csv",
        "confusion.csv",
    ] {
        let a = fs::read(out_a.join(name)).unwrap();
        let b = fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
    // metrics layout: header, one AUC row per repeat, then mean and sd
    let metrics = fs::read_to_string(out_a.join("metrics.csv")).unwrap();
    let lines: Vec<&str> = metrics.lines().collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[0], "repeat,auc");
    assert!(lines[3].starts_with("mean,"));
    assert!(lines[4].starts_with("sd,"));

    // checkpoint round trip preserves forward outputs bit for bit
    let (model, meta) = load_checkpoint(&out_a.join("model_r1.hxnc")).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let tiles: Vec<Tensor<f32>> = (0..4)
        .map(|_| {
            Tensor::from_vec(
                &[3, 32, 32],
                (0..3 * 32 * 32)
                    .map(|_| rng.random_range(0.0..1.0f32))
                    .collect(),
            )
            .unwrap()
        })
        .collect();
    let bag = Bag::new("b", tiles, None);
    let before = forward_bag(&model, &bag).unwrap();
    let resaved = dir.join("resaved.hxnc");
    save_checkpoint(&model, meta, &resaved).unwrap();
    assert_eq!(
        fs::read(out_a.join("model_r1.hxnc")).unwrap(),
        fs::read(&resaved).unwrap(),
        "save-load-save must be byte-identical"
    );
    let (reloaded, _) = load_checkpoint(&resaved).unwrap();
    let after = forward_bag(&reloaded, &bag).unwrap();
    assert_eq!(before.probs, after.probs);
    assert_eq!(before.attention, after.attention);

    // corruption anywhere in the header fails loudly
    let bytes = fs::read(&resaved).unwrap();
    for i in [0usize, 5, 9, 20, 40] {
        let mut corrupt = bytes.clone();
        corrupt[i] ^= 0x5A;
        assert!(
            histomil::mil::load_checkpoint_bytes(&corrupt).is_err(),
            "byte {i} corruption must not load"
        );
    }
    println!(
        "acceptance criterion 8: PASS (bit-identical reruns, exact round trip, loud corruption)"
    );
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn criterion_9_attention_invariants_over_1000_bags() {
    let config = ModelConfig {
        backbone: vec![],
        feature_dim: 8,
        attention_hidden: 8,
        head_hidden: 8,
        n_classes: 2,
        tile_size: 16,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let model = MilModel::<f32>::init(config, &mut rng).unwrap();

    for case in 0..1000 {
        let n = rng.random_range(1..=8);
        let embeddings: Vec<Tensor<f32>> = (0..n)
            .map(|_| {
                Tensor::from_vec(
                    &[8],
                    (0..8).map(|_| rng.random_range(-2.0..2.0f32)).collect(),
                )
                .unwrap()
            })
            .collect();
        let bag = Bag::new("a", embeddings, None);
        let out = forward_bag_embeddings(&model, &bag).unwrap();
        let sum: f64 = out.attention.iter().map(|&a| a as f64).sum();
        assert!((sum - 1.0).abs() < 1e-6, "case {case}: attention sum {sum}");
        if n == 1 {
            assert_eq!(out.attention[0], 1.0, "singleton weight must be exactly 1");
        }
        let mut permuted = bag.clone();
        permuted.instances.reverse();
        let out_p = forward_bag_embeddings(&model, &permuted).unwrap();
        assert_eq!(
            out.probs, out_p.probs,
            "case {case}: permutation changed the score"
        );
        assert_eq!(out.attention, out_p.attention);
    }

    // the same invariants through the conv backbone
    let conv_cfg = ModelConfig {
        backbone: vec![3, 6],
        feature_dim: 6,
        attention_hidden: 8,
        head_hidden: 8,
        n_classes: 2,
        tile_size: 16,
    };
    let conv_model = MilModel::<f32>::init(conv_cfg, &mut rng).unwrap();
    for _ in 0..25 {
        let n = rng.random_range(1..=4);
        let tiles: Vec<Tensor<f32>> = (0..n)
            .map(|_| {
                Tensor::from_vec(
                    &[3, 16, 16],
                    (0..3 * 256)
                        .map(|_| rng.random_range(0.0..1.0f32))
                        .collect(),
                )
                .unwrap()
            })
            .collect();
        let bag = Bag::new("c", tiles, None);
        let out = forward_bag(&conv_model, &bag).unwrap();
        let sum: f64 = out.attention.iter().map(|&a| a as f64).sum();
        assert!((sum - 1.0).abs() < 1e-6);
        if n == 1 {
            assert_eq!(out.attention[0], 1.0);
        }
        let mut permuted = bag.clone();
        permuted.instances.rotate_left(1);
        let out_p = forward_bag(&conv_model, &permuted).unwrap();
        assert_eq!(out.probs, out_p.probs);
    }
    println!("acceptance criterion 9: PASS (1000 embedding bags + 25 conv bags)");
}
