use crate::autograd::{Scalar, Tensor};
use crate::error::{Error, Result};
use crate::mil::forward::{Bag, BagGraph, HYPOXIC_CLASS};
use crate::mil::model::MilModel;

/// Gradient-weighted class activation map of one tile.
#[derive(Debug, Clone)]
pub struct CamOutput<E: Scalar> {
    /// tile-resolution heat map in [0, 1], row-major
    pub heat_map: Vec<E>,
    pub height: usize,
    pub width: usize,
    /// per-channel weights (spatial mean of the logit gradient)
    pub channel_weights: Vec<E>,
    /// spatial size of the last conv block's activation maps
    pub activation_shape: (usize, usize),
}

/// Gradient of the hypoxic pre-softmax logit with respect to the last conv
/// block's ReLU activations; channel weights are the spatial gradient means,
/// the map is the ReLU of the weighted activation sum, bilinearly upsampled
/// to tile resolution and min-max normalized (an all-zero map stays zero).
pub fn grad_cam<E: Scalar>(model: &MilModel<E>, tile: &Tensor<E>) -> Result<CamOutput<E>> {
    if model.config.backbone.is_empty() {
        return Err(Error::Argument("grad_cam needs a conv backbone".into()));
    }
    let (tile_h, tile_w) = match tile.shape() {
        [3, h, w] => (*h, *w),
        s => {
            return Err(Error::Shape(format!(
                "grad_cam expects a [3,H,W] tile, got {s:?}"
            )))
        }
    };

    let bag = Bag::new("cam", vec![tile.clone()], None);
    let mut fwd = BagGraph::build(model, &bag, None)?;

    let mut seed = Tensor::zeros(&[model.config.n_classes]);
    seed[HYPOXIC_CLASS] = E::ONE;
    fwd.graph.backward_from(fwd.logits_node, seed)?;

    let act_node = fwd.last_act_nodes[0];
    let act = fwd.graph.value(act_node).clone();
    let grad = fwd.graph.grad_or_zero(act_node);
    let (c, h, w) = match act.shape() {
        [c, h, w] => (*c, *h, *w),
        _ => unreachable!("backbone activations are [C,H,W]"),
    };

    let spatial_inv = E::from_f64(1.0 / (h * w) as f64);
    let mut weights = vec![E::ZERO; c];
    for (ch, weight) in weights.iter_mut().enumerate() {
        let mut acc = E::ZERO;
        for &g in &grad.data()[ch * h * w..(ch + 1) * h * w] {
            acc += g;
        }
        *weight = acc * spatial_inv;
    }

    let mut map = vec![E::ZERO; h * w];
    for (ch, &weight) in weights.iter().enumerate() {
        let plane = &act.data()[ch * h * w..(ch + 1) * h * w];
        for (m, &a) in map.iter_mut().zip(plane) {
            *m += weight * a;
        }
    }
    for m in &mut map {
        *m = m.maximum(E::ZERO);
    }

    let upsampled = bilinear_resize(&map, h, w, tile_h, tile_w);
    let heat_map = min_max_normalize(upsampled);
    Ok(CamOutput {
        heat_map,
        height: tile_h,
        width: tile_w,
        channel_weights: weights,
        activation_shape: (h, w),
    })
}

/// Half-pixel-center bilinear resampling.
fn bilinear_resize<E: Scalar>(
    src: &[E],
    src_h: usize,
    src_w: usize,
    dst_h: usize,
    dst_w: usize,
) -> Vec<E> {
    let mut out = vec![E::ZERO; dst_h * dst_w];
    for y in 0..dst_h {
        let sy =
            ((y as f64 + 0.5) * src_h as f64 / dst_h as f64 - 0.5).clamp(0.0, (src_h - 1) as f64);
        let y0 = sy.floor() as usize;
        let y1 = (y0 + 1).min(src_h - 1);
        let fy = E::from_f64(sy - y0 as f64);
        for x in 0..dst_w {
            let sx = ((x as f64 + 0.5) * src_w as f64 / dst_w as f64 - 0.5)
                .clamp(0.0, (src_w - 1) as f64);
            let x0 = sx.floor() as usize;
            let x1 = (x0 + 1).min(src_w - 1);
            let fx = E::from_f64(sx - x0 as f64);
            let one = E::ONE;
            let top = src[y0 * src_w + x0] * (one - fx) + src[y0 * src_w + x1] * fx;
            let bottom = src[y1 * src_w + x0] * (one - fx) + src[y1 * src_w + x1] * fx;
            out[y * dst_w + x] = top * (one - fy) + bottom * fy;
        }
    }
    out
}

fn min_max_normalize<E: Scalar>(mut values: Vec<E>) -> Vec<E> {
    let mut lo = values[0];
    let mut hi = values[0];
    for &v in &values {
        if v < lo {
            lo = v;
        }
        if v > hi {
            hi = v;
        }
    }
    if hi == lo {
        // constant map: all-zero stays zero, constant-positive saturates
        let fill = if hi > E::ZERO { E::ONE } else { E::ZERO };
        values.fill(fill);
        return values;
    }
    let range = hi - lo;
    for v in &mut values {
        *v = (*v - lo) / range;
    }
    values
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mil::config::ModelConfig;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model(seed: u64) -> MilModel<f64> {
        let cfg = ModelConfig {
            backbone: vec![2, 3],
            feature_dim: 3,
            attention_hidden: 4,
            head_hidden: 4,
            n_classes: 2,
            tile_size: 16,
        };
        MilModel::init(cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    fn tile(rng: &mut ChaCha8Rng, side: usize) -> Tensor<f64> {
        Tensor::from_vec(
            &[3, side, side],
            (0..3 * side * side)
                .map(|_| rng.random_range(0.0..1.0))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn map_is_tile_resolution_and_in_unit_range() {
        let model = model(1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = tile(&mut rng, 16);
        let cam = grad_cam(&model, &t).unwrap();
        assert_eq!(cam.heat_map.len(), 16 * 16);
        assert_eq!((cam.height, cam.width), (16, 16));
        assert!(cam.heat_map.iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert_eq!(cam.activation_shape, (8, 8));
    }

    #[test]
    fn constant_activations_give_a_constant_map() {
        let model = model(3);
        // constant tile -> conv outputs are spatially constant (same padding
        // effects aside, interior dominates; use an all-zero tile so every
        // activation map is exactly constant)
        let t = Tensor::from_vec(&[3, 8, 8], vec![0.0; 3 * 64]).unwrap();
        let cam = grad_cam(&model, &t).unwrap();
        let first = cam.heat_map[0];
        assert!(
            cam.heat_map.iter().all(|&v| v == first),
            "{:?}",
            &cam.heat_map[..4]
        );
    }

    #[test]
    fn rejects_backbone_free_models_and_bad_shapes() {
        let cfg = ModelConfig {
            backbone: vec![],
            feature_dim: 4,
            attention_hidden: 4,
            head_hidden: 4,
            n_classes: 2,
            tile_size: 8,
        };
        let m = MilModel::<f64>::init(cfg, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let t = Tensor::from_vec(&[3, 8, 8], vec![0.1; 3 * 64]).unwrap();
        assert!(grad_cam(&m, &t).is_err());

        let m = model(5);
        let bad = Tensor::from_vec(&[1, 8, 8], vec![0.1; 64]).unwrap();
        assert!(grad_cam(&m, &bad).is_err());
    }
}
