use std::path::PathBuf;

use clap::Args;
use histomil::autograd::{gradient_check, GradCheckConfig, Tensor};
use histomil::mil::{Bag, MilModel, ModelConfig};
use histomil::signature::TissueClass;
use histomil::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::tables::Table;

/// Finite-difference check of the full MIL model on a down-scaled
/// configuration (16x16 tiles, bag of 3, two conv blocks), in 64-bit.
#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 20)]
    pub seeds: u64,
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
    /// entries sampled per large tensor
    #[arg(long = "entries-per-tensor", default_value_t = 100)]
    pub entries_per_tensor: usize,
    /// optional CSV report destination
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn downscaled_config() -> ModelConfig {
    ModelConfig {
        backbone: vec![4, 8],
        feature_dim: 8,
        attention_hidden: 8,
        head_hidden: 8,
        n_classes: 2,
        tile_size: 16,
    }
}

#[derive(Debug)]
pub struct SeedCheck {
    pub seed: u64,
    pub max_rel_error: f64,
    pub entries_checked: usize,
    pub passed: bool,
}

/// One full-model check per seed: fresh parameters, fresh random bag of 3.
pub fn check_seeds(
    seeds: u64,
    tolerance: f64,
    entries_per_tensor: usize,
) -> Result<Vec<SeedCheck>> {
    let config = downscaled_config();
    let mut results = Vec::with_capacity(seeds as usize);
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut model = MilModel::<f64>::init(config.clone(), &mut rng)?;
        // the check must run at a differentiable point: zero-initialized
        // biases leave dead activation regions whose pooled planes are
        // constant, and the resulting exact pool ties make the loss
        // non-differentiable in the tied parameters. Small positive random
        // biases keep activations alive and responses spatially distinct.
        for (name, tensor) in model.params.iter_mut() {
            if name.ends_with(".bias") {
                for v in tensor.data_mut() {
                    *v = rng.random_range(0.02..0.3);
                }
            }
        }
        // per-instance contrast and offset keep the pooled features apart;
        // indistinguishable instances would park the attention Jacobian in
        // a cancellation zone where central differences lose all accuracy
        let tiles: Vec<Tensor<f64>> = (0..3)
            .map(|_| {
                let amplitude = rng.random_range(0.3..1.0);
                let offset = rng.random_range(0.0..1.0 - amplitude);
                Tensor::from_vec(
                    &[3, 16, 16],
                    (0..3 * 256)
                        .map(|_| offset + amplitude * rng.random_range(0.0..1.0))
                        .collect(),
                )
            })
            .collect::<Result<_>>()?;
        let target = rng.random_range(0..2usize);
        let label = if target == 1 {
            TissueClass::Hypoxic
        } else {
            TissueClass::Normoxic
        };
        let bag = Bag::new("check", tiles, Some(label));

        let report = gradient_check(
            &model.params,
            |g, p| {
                let m = MilModel::from_parts(config.clone(), p.clone())?;
                build_loss_for_tests(g, &m, &bag, target)
            },
            &GradCheckConfig {
                tolerance,
                max_entries_per_tensor: entries_per_tensor,
                seed,
                ..Default::default()
            },
        )?;
        results.push(SeedCheck {
            seed,
            max_rel_error: report.max_rel_error,
            entries_checked: report.entries_checked,
            passed: report.passed(),
        });
    }
    Ok(results)
}

/// Rebuild the bag loss against the harness's perturbed parameter store.
pub fn build_loss_for_tests(
    g: &mut histomil::autograd::Graph<f64>,
    model: &MilModel<f64>,
    bag: &Bag<f64>,
    target: usize,
) -> Result<(histomil::autograd::NodeId, Vec<histomil::autograd::NodeId>)> {
    let nodes: Vec<_> = model
        .params
        .iter()
        .map(|(_, t)| g.param(t.clone()))
        .collect();
    let n_blocks = model.config.backbone.len();
    let mut h_nodes = Vec::new();
    for inst in &bag.instances {
        let mut x = g.input(inst.data.clone());
        for b in 0..n_blocks {
            x = g.conv2d(x, nodes[2 * b], nodes[2 * b + 1])?;
            x = g.relu(x)?;
            x = g.maxpool2(x)?;
        }
        h_nodes.push(g.global_avg_pool(x)?);
    }
    let pid = |o: usize| 2 * n_blocks + o;
    let h = g.concat_rows(&h_nodes)?;
    let scored = g.matmul(h, nodes[pid(0)])?;
    let t = g.tanh_act(scored)?;
    let e = g.matmul(t, nodes[pid(1)])?;
    let ev = g.reshape(e, &[h_nodes.len()])?;
    let a = g.softmax(ev)?;
    let ar = g.reshape(a, &[1, h_nodes.len()])?;
    let z = g.matmul(ar, h)?;
    let u = g.matmul(z, nodes[pid(2)])?;
    let ub = g.add_bias(u, nodes[pid(3)])?;
    let ur = g.relu(ub)?;
    let lo = g.matmul(ur, nodes[pid(4)])?;
    let lob = g.add_bias(lo, nodes[pid(5)])?;
    let lv = g.reshape(lob, &[model.config.n_classes])?;
    let probs = g.softmax(lv)?;
    let loss = g.cross_entropy(probs, target)?;
    Ok((loss, nodes))
}

pub fn run(args: &GradcheckArgs) -> Result<()> {
    let results = check_seeds(args.seeds, args.tolerance, args.entries_per_tensor)?;
    let mut table = Table::new(&["seed", "max_rel_error", "entries_checked", "passed"]);
    let mut worst = 0.0f64;
    let mut failures = 0;
    for r in &results {
        println!(
            "seed {:>3}: max relative error {:.3e} over {} entries -> {}",
            r.seed,
            r.max_rel_error,
            r.entries_checked,
            if r.passed { "ok" } else { "FAIL" }
        );
        worst = worst.max(r.max_rel_error);
        if !r.passed {
            failures += 1;
        }
        table.push(vec![
            r.seed.to_string(),
            r.max_rel_error.to_string(),
            r.entries_checked.to_string(),
            r.passed.to_string(),
        ]);
    }
    if let Some(out) = &args.out {
        std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        table.save(&out.join("gradcheck.csv"))?;
    }
    println!(
        "worst over {} seeds: {worst:.3e} (tolerance {})",
        args.seeds, args.tolerance
    );
    if failures > 0 {
        return Err(Error::Argument(format!(
            "{failures} of {} seeds failed",
            args.seeds
        )));
    }
    Ok(())
}
