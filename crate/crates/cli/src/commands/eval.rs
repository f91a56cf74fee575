use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use histomil::mil::{infer_sample, save_checkpoint, train, write_loss_log, CheckpointMeta};
use histomil::signature::{SampleLabel, TissueClass};
use histomil::slide::TileManifest;
use histomil::stats::{confusion, make_splits, roc_auc, ConfusionMatrix, SplitPlan};
use histomil::{Error, Result};

use crate::commands::{load_model, sample_tensors};
use crate::config::{echo_run, PipelineConfig};
use crate::tables::{read_labels, Table};

/// Evaluate with the repeated stratified split protocol, or score a test
/// set against an existing checkpoint.
#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// skip training: evaluate this checkpoint on every labeled sample
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub splits: usize,
    #[arg(long = "test-fraction", default_value_t = 1.0 / 3.0)]
    pub test_fraction: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// use the down-scaled synthetic benchmark model
    #[arg(long = "synthetic-model", default_value_t = false)]
    pub synthetic_model: bool,
}

#[derive(Debug)]
pub struct ProtocolOutcome {
    pub aucs: Vec<f64>,
    pub mean_auc: f64,
    /// sample standard deviation over the repeats
    pub sd_auc: f64,
    /// confusion matrix of the first repeat at threshold 0.5
    pub confusion: ConfusionMatrix,
}

fn scores_for(
    model: &histomil::mil::MilModel<f32>,
    manifest: &TileManifest,
    labels: &[SampleLabel],
) -> Result<(Vec<f64>, Vec<bool>)> {
    let mut scores = Vec::with_capacity(labels.len());
    let mut truth = Vec::with_capacity(labels.len());
    for label in labels {
        let tiles = sample_tensors(manifest, &label.sample_id, model.config.tile_size)?;
        scores.push(infer_sample(model, &tiles)? as f64);
        truth.push(label.label == TissueClass::Hypoxic);
    }
    Ok((scores, truth))
}

fn write_splits_csv(plans: &[SplitPlan], path: &Path) -> Result<()> {
    let mut t = Table::new(&["repeat", "sample_id", "role"]);
    for plan in plans {
        for id in &plan.train {
            t.push(vec![plan.repeat.to_string(), id.clone(), "train".into()]);
        }
        for id in &plan.test {
            t.push(vec![plan.repeat.to_string(), id.clone(), "test".into()]);
        }
    }
    t.save(path)
}

fn write_confusion_csv(m: &ConfusionMatrix, path: &Path) -> Result<()> {
    let mut t = Table::new(&["tp", "fp", "tn", "fn"]);
    t.push(vec![
        m.tp.to_string(),
        m.fp.to_string(),
        m.tn.to_string(),
        m.fn_.to_string(),
    ]);
    t.save(path)
}

/// Train/test each stratified split and aggregate AUCs; everything the run
/// produced lands in `out_dir`.
pub fn run_protocol(
    config: &PipelineConfig,
    manifest: &TileManifest,
    labels: &[SampleLabel],
    n_splits: usize,
    test_fraction: f64,
    out_dir: &Path,
) -> Result<ProtocolOutcome> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let pairs: Vec<(String, bool)> = labels
        .iter()
        .map(|l| (l.sample_id.clone(), l.label == TissueClass::Hypoxic))
        .collect();
    let plans = make_splits(&pairs, n_splits, test_fraction, config.seed)?;
    write_splits_csv(&plans, &out_dir.join("splits.csv"))?;

    let mut aucs = Vec::with_capacity(plans.len());
    let mut first_confusion = None;
    for plan in &plans {
        let train_labels: Vec<SampleLabel> = labels
            .iter()
            .filter(|l| plan.train.contains(&l.sample_id))
            .cloned()
            .collect();
        let test_labels: Vec<SampleLabel> = labels
            .iter()
            .filter(|l| plan.test.contains(&l.sample_id))
            .cloned()
            .collect();

        // derive the per-repeat training seed from the protocol seed
        let mut train_config = config.train.clone();
        train_config.seed = config.seed.wrapping_add(plan.repeat as u64);
        let outcome = train(&config.model, &train_config, manifest, &train_labels)?;

        let model_path = out_dir.join(format!("model_r{}.hxnc", plan.repeat));
        save_checkpoint(
            &outcome.model,
            CheckpointMeta {
                seed: train_config.seed,
                epoch: outcome.epochs_run as u32,
            },
            &model_path,
        )?;
        let log_path = out_dir.join(format!("loss_log_r{}.csv", plan.repeat));
        let mut log_file = File::create(&log_path).map_err(|e| Error::io(&log_path, e))?;
        write_loss_log(&outcome.loss_log, &mut log_file).map_err(|e| Error::io(&log_path, e))?;
        log_file.flush().map_err(|e| Error::io(&log_path, e))?;

        let (scores, truth) = scores_for(&outcome.model, manifest, &test_labels)?;
        aucs.push(roc_auc(&scores, &truth)?);
        if first_confusion.is_none() {
            first_confusion = Some(confusion(&scores, &truth, 0.5));
        }
    }

    let mean = aucs.iter().sum::<f64>() / aucs.len() as f64;
    let sd = if aucs.len() > 1 {
        (aucs.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (aucs.len() - 1) as f64).sqrt()
    } else {
        0.0
    };

    let mut metrics = Table::new(&["repeat", "auc"]);
    for (plan, auc) in plans.iter().zip(&aucs) {
        metrics.push(vec![plan.repeat.to_string(), auc.to_string()]);
    }
    metrics.push(vec!["mean".into(), mean.to_string()]);
    metrics.push(vec!["sd".into(), sd.to_string()]);
    metrics.save(&out_dir.join("metrics.csv"))?;

    let confusion = first_confusion.expect("at least one split");
    write_confusion_csv(&confusion, &out_dir.join("confusion.csv"))?;

    Ok(ProtocolOutcome {
        aucs,
        mean_auc: mean,
        sd_auc: sd,
        confusion,
    })
}

pub fn run(args: &EvalArgs) -> Result<()> {
    let mut config = PipelineConfig::load(args.config.as_deref())?;
    if args.synthetic_model {
        config.model = histomil::mil::ModelConfig::synthetic_benchmark();
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(e) = args.epochs {
        config.train.epochs = e;
    }
    config.validate()?;

    let manifest = TileManifest::load(&args.manifest)?;
    let labels = read_labels(&args.labels)?;

    match &args.checkpoint {
        Some(ckpt) => {
            let model = load_model(ckpt)?;
            let (scores, truth) = scores_for(&model, &manifest, &labels)?;
            let auc = roc_auc(&scores, &truth)?;
            let m = confusion(&scores, &truth, 0.5);
            std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
            let mut metrics = Table::new(&["repeat", "auc"]);
            metrics.push(vec!["1".into(), auc.to_string()]);
            metrics.save(&args.out.join("metrics.csv"))?;
            write_confusion_csv(&m, &args.out.join("confusion.csv"))?;
            echo_run(
                &args.out,
                "eval",
                &[&args.manifest, &args.labels, ckpt],
                &config,
            )?;
            println!("checkpoint AUC {auc:.4} on {} samples", labels.len());
        }
        None => {
            let outcome = run_protocol(
                &config,
                &manifest,
                &labels,
                args.splits,
                args.test_fraction,
                &args.out,
            )?;
            echo_run(&args.out, "eval", &[&args.manifest, &args.labels], &config)?;
            println!(
                "protocol AUC {:.4} +- {:.4} over {} splits (per-repeat: {})",
                outcome.mean_auc,
                outcome.sd_auc,
                outcome.aucs.len(),
                outcome
                    .aucs
                    .iter()
                    .map(|a| format!("{a:.4}"))
                    .collect::<Vec<_>>()
                    .join(", ")
            );
        }
    }
    Ok(())
}
