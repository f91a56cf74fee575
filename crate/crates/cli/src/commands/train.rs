use std::fs::File;
use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use histomil::mil::{save_checkpoint, train, write_loss_log, CheckpointMeta};
use histomil::slide::TileManifest;
use histomil::{Error, Result};

use crate::config::{echo_run, PipelineConfig};
use crate::tables::read_labels;

/// Train the MIL classifier on labeled samples.
#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long = "bag-size")]
    pub bag_size: Option<usize>,
    #[arg(long = "learning-rate")]
    pub learning_rate: Option<f64>,
    /// use the down-scaled synthetic benchmark model
    #[arg(long = "synthetic-model", default_value_t = false)]
    pub synthetic_model: bool,
}

pub(crate) fn resolve_config(args: &TrainArgs) -> Result<PipelineConfig> {
    let mut config = PipelineConfig::load(args.config.as_deref())?;
    if args.synthetic_model {
        config.model = histomil::mil::ModelConfig::synthetic_benchmark();
    }
    if let Some(s) = args.seed {
        config.seed = s;
        config.train.seed = s;
    } else {
        config.train.seed = config.seed;
    }
    if let Some(e) = args.epochs {
        config.train.epochs = e;
    }
    if let Some(b) = args.bag_size {
        config.train.bag_size = b;
    }
    if let Some(lr) = args.learning_rate {
        config.train.learning_rate = lr;
    }
    config.validate()?;
    Ok(config)
}

pub fn run(args: &TrainArgs) -> Result<()> {
    let config = resolve_config(args)?;
    let manifest = TileManifest::load(&args.manifest)?;
    let labels = read_labels(&args.labels)?;

    let outcome = train(&config.model, &config.train, &manifest, &labels)?;

    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let model_path = args.out.join("model.hxnc");
    save_checkpoint(
        &outcome.model,
        CheckpointMeta {
            seed: config.train.seed,
            epoch: outcome.epochs_run as u32,
        },
        &model_path,
    )?;
    let log_path = args.out.join("loss_log.csv");
    let mut log_file = File::create(&log_path).map_err(|e| Error::io(&log_path, e))?;
    write_loss_log(&outcome.loss_log, &mut log_file).map_err(|e| Error::io(&log_path, e))?;
    log_file.flush().map_err(|e| Error::io(&log_path, e))?;

    echo_run(&args.out, "train", &[&args.manifest, &args.labels], &config)?;
    let last = outcome
        .loss_log
        .last()
        .map(|e| e.mean_loss)
        .unwrap_or(f64::NAN);
    println!(
        "trained {} epochs on {} samples (final mean loss {last:.4}) -> {}",
        outcome.epochs_run,
        labels.len(),
        model_path.display()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_the_config_file() {
        let dir = std::env::temp_dir().join("histomil_train_cfg_test");
        std::fs::create_dir_all(&dir).unwrap();
        let cfg_path = dir.join("config.json");
        let cfg = crate::config::PipelineConfig {
            seed: 3,
            train: histomil::mil::TrainConfig {
                epochs: 9,
                ..Default::default()
            },
            ..Default::default()
        };
        std::fs::write(&cfg_path, cfg.to_json()).unwrap();

        let args = TrainArgs {
            manifest: dir.join("m.csv"),
            labels: dir.join("l.csv"),
            out: dir.join("out"),
            config: Some(cfg_path),
            seed: Some(42),
            epochs: Some(2),
            bag_size: None,
            learning_rate: None,
            synthetic_model: false,
        };
        let resolved = resolve_config(&args).unwrap();
        assert_eq!(resolved.train.epochs, 2);
        assert_eq!(resolved.train.seed, 42);
        assert_eq!(resolved.seed, 42);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn config_seed_flows_into_training_when_no_flag() {
        let args = TrainArgs {
            manifest: "m".into(),
            labels: "l".into(),
            out: "o".into(),
            config: None,
            seed: None,
            epochs: None,
            bag_size: None,
            learning_rate: None,
            synthetic_model: true,
        };
        let resolved = resolve_config(&args).unwrap();
        assert_eq!(resolved.train.seed, resolved.seed);
        assert_eq!(resolved.model.backbone, vec![3, 6]);
    }
}
