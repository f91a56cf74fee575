use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Network shape: conv backbone (channels per 3x3+ReLU+maxpool block), GAP
/// feature width, attention and head hidden sizes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_backbone")]
    pub backbone: Vec<usize>,
    #[serde(default = "default_feature_dim")]
    pub feature_dim: usize,
    #[serde(default = "default_attention_hidden")]
    pub attention_hidden: usize,
    #[serde(default = "default_head_hidden")]
    pub head_hidden: usize,
    #[serde(default = "default_n_classes")]
    pub n_classes: usize,
    #[serde(default = "default_tile_size")]
    pub tile_size: usize,
}

fn default_backbone() -> Vec<usize> {
    vec![8, 16, 32]
}
fn default_feature_dim() -> usize {
    32
}
fn default_attention_hidden() -> usize {
    64
}
fn default_head_hidden() -> usize {
    64
}
fn default_n_classes() -> usize {
    2
}
fn default_tile_size() -> usize {
    512
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            backbone: default_backbone(),
            feature_dim: default_feature_dim(),
            attention_hidden: default_attention_hidden(),
            head_hidden: default_head_hidden(),
            n_classes: default_n_classes(),
            tile_size: default_tile_size(),
        }
    }
}

impl ModelConfig {
    /// Down-scaled network for the synthetic 64x64 benchmark.
    pub fn synthetic_benchmark() -> Self {
        ModelConfig {
            backbone: vec![3, 6],
            feature_dim: 6,
            attention_hidden: 16,
            head_hidden: 16,
            n_classes: 2,
            tile_size: 64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_classes != 2 {
            return Err(Error::Config(format!(
                "n_classes must be 2, got {}",
                self.n_classes
            )));
        }
        for &d in [
            self.feature_dim,
            self.attention_hidden,
            self.head_hidden,
            self.tile_size,
        ]
        .iter()
        {
            if d == 0 {
                return Err(Error::Config(
                    "all model dimensions must be positive".into(),
                ));
            }
        }
        if self.backbone.contains(&0) {
            return Err(Error::Config(
                "backbone channel counts must be positive".into(),
            ));
        }
        if let Some(&last) = self.backbone.last() {
            if last != self.feature_dim {
                return Err(Error::Config(format!(
                    "feature_dim {} must equal the last backbone channel count {last}",
                    self.feature_dim
                )));
            }
        }
        // each block halves the spatial size; GAP needs at least one pixel
        if !self.backbone.is_empty() && self.tile_size >> self.backbone.len() == 0 {
            return Err(Error::Config(format!(
                "tile_size {} too small for {} pooling blocks",
                self.tile_size,
                self.backbone.len()
            )));
        }
        Ok(())
    }

    /// Parameter names and shapes, in creation order.
    pub fn param_specs(&self) -> Vec<(String, Vec<usize>)> {
        let mut specs = Vec::new();
        let mut prev = 3usize;
        for (i, &ch) in self.backbone.iter().enumerate() {
            specs.push((format!("conv{i}.weight"), vec![ch, prev, 3, 3]));
            specs.push((format!("conv{i}.bias"), vec![ch]));
            prev = ch;
        }
        specs.push((
            "attn.v".into(),
            vec![self.feature_dim, self.attention_hidden],
        ));
        specs.push(("attn.w".into(), vec![self.attention_hidden, 1]));
        specs.push((
            "head.fc1.weight".into(),
            vec![self.feature_dim, self.head_hidden],
        ));
        specs.push(("head.fc1.bias".into(), vec![self.head_hidden]));
        specs.push((
            "head.fc2.weight".into(),
            vec![self.head_hidden, self.n_classes],
        ));
        specs.push(("head.fc2.bias".into(), vec![self.n_classes]));
        specs
    }
}

/// Spectral and geometric augmentation toggles and ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentConfig {
    #[serde(default = "default_true")]
    pub enabled: bool,
    #[serde(default = "default_true")]
    pub rotate: bool,
    #[serde(default = "default_true")]
    pub flip: bool,
    #[serde(default = "default_true")]
    pub hue: bool,
    #[serde(default = "default_true")]
    pub gamma: bool,
    #[serde(default = "default_true")]
    pub noise: bool,
    /// hue shift drawn uniformly from +-this many degrees
    #[serde(default = "default_hue_max")]
    pub hue_max_degrees: f64,
    #[serde(default = "default_gamma_min")]
    pub gamma_min: f64,
    #[serde(default = "default_gamma_max")]
    pub gamma_max: f64,
    /// noise sigma drawn uniformly from [0, this], in units of full scale
    #[serde(default = "default_noise_sigma")]
    pub noise_sigma_max: f64,
}

fn default_true() -> bool {
    true
}
fn default_hue_max() -> f64 {
    18.0
}
fn default_gamma_min() -> f64 {
    0.8
}
fn default_gamma_max() -> f64 {
    1.25
}
fn default_noise_sigma() -> f64 {
    0.02
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            enabled: true,
            rotate: true,
            flip: true,
            hue: true,
            gamma: true,
            noise: true,
            hue_max_degrees: default_hue_max(),
            gamma_min: default_gamma_min(),
            gamma_max: default_gamma_max(),
            noise_sigma_max: default_noise_sigma(),
        }
    }
}

/// Training hyperparameters. Plain SGD, one bag per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_bag_size")]
    pub bag_size: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub augment: AugmentConfig,
}

fn default_lr() -> f64 {
    0.0003
}
fn default_epochs() -> usize {
    100
}
fn default_bag_size() -> usize {
    20
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: default_lr(),
            epochs: default_epochs(),
            bag_size: default_bag_size(),
            seed: 0,
            augment: AugmentConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 {
            return Err(Error::Config(format!(
                "learning_rate {} must be > 0",
                self.learning_rate
            )));
        }
        if self.bag_size == 0 {
            return Err(Error::Config("bag_size must be at least 1".into()));
        }
        if self.augment.gamma_min <= 0.0 || self.augment.gamma_max < self.augment.gamma_min {
            return Err(Error::Config("invalid gamma range".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        ModelConfig::default().validate().unwrap();
        ModelConfig::synthetic_benchmark().validate().unwrap();
        TrainConfig::default().validate().unwrap();
    }

    #[test]
    fn feature_dim_must_match_backbone() {
        let cfg = ModelConfig {
            feature_dim: 99,
            ..ModelConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let json = r#"{"backbone":[4,8],"feature_dim":8,"mystery":1}"#;
        assert!(serde_json::from_str::<ModelConfig>(json).is_err());
    }

    #[test]
    fn param_specs_cover_the_whole_network() {
        let specs = ModelConfig::default().param_specs();
        let names: Vec<&str> = specs.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(
            names,
            vec![
                "conv0.weight",
                "conv0.bias",
                "conv1.weight",
                "conv1.bias",
                "conv2.weight",
                "conv2.bias",
                "attn.v",
                "attn.w",
                "head.fc1.weight",
                "head.fc1.bias",
                "head.fc2.weight",
                "head.fc2.bias"
            ]
        );
        assert_eq!(specs[0].1, vec![8, 3, 3, 3]);
    }
}
