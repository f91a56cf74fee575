//! The attention-pooled multiple instance learning classifier: backbone,
//! bag forward pass, augmentation, training loop, single-tile scoring,
//! class activation maps, and checkpoint persistence.

mod augment;
mod cam;
mod checkpoint;
mod config;
mod forward;
mod model;
mod train;

pub use augment::{apply_augment, augment_tile, hsv_to_rgb, rgb_to_hsv, AugmentParams};
pub use cam::{grad_cam, CamOutput};
pub use checkpoint::{
    load_checkpoint, load_checkpoint_bytes, save_checkpoint, CheckpointMeta, CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
};
pub use config::{AugmentConfig, ModelConfig, TrainConfig};
pub use forward::{
    class_index, forward_bag, forward_bag_embeddings, infer_sample, score_single_tiles,
    AttentionOutput, Bag, Instance, TileScore, HYPOXIC_CLASS,
};
pub use model::{tile_to_tensor, MilModel};
pub use train::{train, write_loss_log, EpochLoss, TrainOutcome};
