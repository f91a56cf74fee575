use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::autograd::{ParamStore, Scalar, Tensor};
use crate::error::Result;
use crate::mil::config::ModelConfig;
use crate::slide::RgbImage;

/// Backbone + attention + head parameters with their configuration.
#[derive(Debug, Clone)]
pub struct MilModel<E: Scalar> {
    pub config: ModelConfig,
    pub params: ParamStore<E>,
}

impl<E: Scalar> MilModel<E> {
    /// He-style uniform fan-in initialization; weights drawn in parameter
    /// creation order, biases zero. The RNG is consumed deterministically.
    pub fn init(config: ModelConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        config.validate()?;
        let mut params = ParamStore::new();
        for (name, shape) in config.param_specs() {
            let tensor = if name.ends_with(".bias") {
                Tensor::zeros(&shape)
            } else {
                let fan_in: usize = match shape.len() {
                    4 => shape[1] * shape[2] * shape[3], // conv [out, in, 3, 3]
                    2 => shape[0],                       // linear [in, out]
                    _ => shape.iter().product(),
                };
                let limit = (6.0 / fan_in as f64).sqrt();
                let data = (0..shape.iter().product())
                    .map(|_| E::from_f64(rng.random_range(-limit..limit)));
                Tensor::from_vec(&shape, data.collect())?
            };
            params.insert(&name, tensor)?;
        }
        Ok(MilModel { config, params })
    }

    pub fn from_parts(config: ModelConfig, params: ParamStore<E>) -> Result<Self> {
        config.validate()?;
        for (name, shape) in config.param_specs() {
            match params.get(&name) {
                Some(t) if t.shape() == shape.as_slice() => {}
                Some(t) => {
                    return Err(crate::error::Error::Shape(format!(
                        "parameter `{name}` has shape {:?}, expected {shape:?}",
                        t.shape()
                    )))
                }
                None => {
                    return Err(crate::error::Error::Argument(format!(
                        "missing parameter `{name}`"
                    )))
                }
            }
        }
        Ok(MilModel { config, params })
    }

    pub fn to_f64(&self) -> MilModel<f64> {
        MilModel {
            config: self.config.clone(),
            params: self.params.to_f64(),
        }
    }
}

/// Channel-major [3, H, W] tensor with pixel values scaled to [0, 1].
pub fn tile_to_tensor<E: Scalar>(img: &RgbImage) -> Tensor<E> {
    let mut lut = [E::ZERO; 256];
    for (i, v) in lut.iter_mut().enumerate() {
        *v = E::from_f64(i as f64 / 255.0);
    }
    let (h, w) = (img.height(), img.width());
    let plane = h * w;
    let mut data = vec![E::ZERO; 3 * plane];
    for (i, px) in img.pixels().chunks_exact(3).enumerate() {
        data[i] = lut[px[0] as usize];
        data[plane + i] = lut[px[1] as usize];
        data[2 * plane + i] = lut[px[2] as usize];
    }
    Tensor::from_vec(&[3, h, w], data).expect("sizes agree by construction")
}
