use std::collections::HashMap;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autograd::{Scalar, Tensor};
use crate::error::{Error, Result};
use crate::mil::augment::augment_tile;
use crate::mil::config::{ModelConfig, TrainConfig};
use crate::mil::forward::{class_index, Bag, BagGraph};
use crate::mil::model::{tile_to_tensor, MilModel};
use crate::signature::SampleLabel;
use crate::slide::{RgbImage, TileManifest};

#[derive(Debug, Clone, PartialEq)]
pub struct EpochLoss {
    pub epoch: usize,
    pub mean_loss: f64,
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub model: MilModel<f32>,
    pub loss_log: Vec<EpochLoss>,
    pub epochs_run: usize,
}

pub fn write_loss_log(log: &[EpochLoss], out: &mut impl std::io::Write) -> std::io::Result<()> {
    writeln!(out, "epoch,mean_loss")?;
    for e in log {
        writeln!(out, "{},{}", e.epoch, e.mean_loss)?;
    }
    Ok(())
}

/// All decoded tiles of the labeled samples, held in memory for the run.
struct TileCache {
    by_sample: HashMap<String, Vec<RgbImage>>,
}

impl TileCache {
    fn load(manifest: &TileManifest, labels: &[SampleLabel], tile_size: usize) -> Result<Self> {
        let mut by_sample = HashMap::new();
        for label in labels {
            let records = manifest.tiles_of(&label.sample_id);
            if records.is_empty() {
                return Err(Error::Config(format!(
                    "labeled sample `{}` has no tiles in the manifest",
                    label.sample_id
                )));
            }
            let mut tiles = Vec::with_capacity(records.len());
            for rec in records {
                let img = RgbImage::load(&rec.path)?;
                if img.width() != tile_size || img.height() != tile_size {
                    return Err(Error::Config(format!(
                        "tile {} is {}x{}, model expects {tile_size}x{tile_size}",
                        rec.path.display(),
                        img.height(),
                        img.width()
                    )));
                }
                tiles.push(img);
            }
            by_sample.insert(label.sample_id.clone(), tiles);
        }
        Ok(TileCache { by_sample })
    }
}

/// One SGD pass: per epoch the labeled samples are visited in a seeded
/// shuffled order; per sample a bag of `bag_size` tiles is drawn (without
/// replacement when the sample has enough tiles, with replacement
/// otherwise), augmented, and used for a single forward/backward/SGD step.
///
/// RNG draws are consumed in a fixed order: model init, then per epoch the
/// shuffle, then per sample the tile draws, then per tile the augmentation
/// parameters and noise. Re-running with the same seed reproduces the
/// checkpoint and loss log bit for bit.
pub fn train(
    model_config: &ModelConfig,
    train_config: &TrainConfig,
    manifest: &TileManifest,
    labels: &[SampleLabel],
) -> Result<TrainOutcome> {
    model_config.validate()?;
    train_config.validate()?;
    if labels.is_empty() {
        return Err(Error::Config("no labeled samples to train on".into()));
    }
    let cache = TileCache::load(manifest, labels, model_config.tile_size)?;

    let mut rng = ChaCha8Rng::seed_from_u64(train_config.seed);
    let mut model = MilModel::<f32>::init(model_config.clone(), &mut rng)?;

    let mut ordered_labels: Vec<&SampleLabel> = labels.iter().collect();
    ordered_labels.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));

    let mut loss_log = Vec::with_capacity(train_config.epochs);
    for epoch in 1..=train_config.epochs {
        let mut epoch_order = ordered_labels.clone();
        epoch_order.shuffle(&mut rng);

        let mut loss_sum = 0.0f64;
        for label in &epoch_order {
            let tiles = &cache.by_sample[&label.sample_id];
            let chosen: Vec<usize> = if tiles.len() >= train_config.bag_size {
                let idx: Vec<usize> = (0..tiles.len()).collect();
                idx.choose_multiple(&mut rng, train_config.bag_size)
                    .copied()
                    .collect()
            } else {
                (0..train_config.bag_size)
                    .map(|_| rng.random_range(0..tiles.len()))
                    .collect()
            };

            let mut instances: Vec<Tensor<f32>> = Vec::with_capacity(chosen.len());
            for &ti in &chosen {
                let img = if train_config.augment.enabled {
                    augment_tile(&tiles[ti], &train_config.augment, &mut rng)
                } else {
                    tiles[ti].clone()
                };
                instances.push(tile_to_tensor(&img));
            }

            let bag = Bag::new(&label.sample_id, instances, Some(label.label));
            let target = class_index(label.label);
            let mut fwd = BagGraph::build(&model, &bag, Some(target))?;
            let loss_node = fwd.loss_node.expect("target provided");
            loss_sum += fwd.graph.value(loss_node)[0].to_f64();
            fwd.graph.backward(loss_node)?;

            let lr = f32::from_f64(train_config.learning_rate);
            for (i, (_, tensor)) in model.params.iter_mut().enumerate() {
                if let Some(grad) = fwd.graph.grad(fwd.param_nodes[i]) {
                    for (p, &g) in tensor.data_mut().iter_mut().zip(grad.data()) {
                        *p -= lr * g;
                    }
                }
            }
        }
        loss_log.push(EpochLoss {
            epoch,
            mean_loss: loss_sum / epoch_order.len() as f64,
        });
    }

    Ok(TrainOutcome {
        model,
        loss_log,
        epochs_run: train_config.epochs,
    })
}
