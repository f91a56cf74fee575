use crate::autograd::{Graph, NodeId, Scalar, Tensor};
use crate::error::{Error, Result};
use crate::mil::model::MilModel;
use crate::signature::TissueClass;

/// Class index convention: normoxic = 0, hypoxic = 1.
pub fn class_index(class: TissueClass) -> usize {
    match class {
        TissueClass::Normoxic => 0,
        TissueClass::Hypoxic => 1,
    }
}

pub const HYPOXIC_CLASS: usize = 1;

/// One bag instance. The index is the instance's identity within the bag;
/// attention pooling always consumes instances in ascending index order, so
/// reordering the list leaves every output bit-identical.
#[derive(Debug, Clone)]
pub struct Instance<E: Scalar> {
    pub index: usize,
    pub data: Tensor<E>,
}

/// The set of tiles (or precomputed embeddings) of one sample.
#[derive(Debug, Clone)]
pub struct Bag<E: Scalar> {
    pub sample_id: String,
    pub instances: Vec<Instance<E>>,
    pub label: Option<TissueClass>,
}

impl<E: Scalar> Bag<E> {
    pub fn new(sample_id: &str, tensors: Vec<Tensor<E>>, label: Option<TissueClass>) -> Self {
        let instances = tensors
            .into_iter()
            .enumerate()
            .map(|(index, data)| Instance { index, data })
            .collect();
        Bag {
            sample_id: sample_id.to_string(),
            instances,
            label,
        }
    }
}

/// Attention weights, pooled feature, and head outputs of one bag pass.
#[derive(Debug, Clone)]
pub struct AttentionOutput<E: Scalar> {
    /// per-instance attention weight, in ascending instance-index order
    pub attention: Vec<E>,
    /// attention-pooled bag feature z
    pub pooled: Tensor<E>,
    /// pre-softmax head outputs
    pub logits: Vec<E>,
    /// class probabilities, summing to 1
    pub probs: Vec<E>,
}

impl<E: Scalar> AttentionOutput<E> {
    /// Probability of the hypoxic class.
    pub fn score(&self) -> E {
        self.probs[HYPOXIC_CLASS]
    }
}

/// Fully built forward graph of one bag, retained for backward passes.
pub(crate) struct BagGraph<E: Scalar> {
    pub graph: Graph<E>,
    /// aligned with the model's parameter store order
    pub param_nodes: Vec<NodeId>,
    /// per instance: ReLU output of the last conv block (empty in embedding mode)
    pub last_act_nodes: Vec<NodeId>,
    pub attention_node: NodeId,
    pub pooled_node: NodeId,
    pub logits_node: NodeId,
    pub probs_node: NodeId,
    pub loss_node: Option<NodeId>,
}

impl<E: Scalar> BagGraph<E> {
    pub fn output(&self) -> AttentionOutput<E> {
        AttentionOutput {
            attention: self.graph.value(self.attention_node).data().to_vec(),
            pooled: self
                .graph
                .value(self.pooled_node)
                .reshaped(&[self.graph.value(self.pooled_node).len()])
                .expect("pooled feature is a vector"),
            logits: self.graph.value(self.logits_node).data().to_vec(),
            probs: self.graph.value(self.probs_node).data().to_vec(),
        }
    }

    /// Instance tensors in ascending index order, backbone per instance,
    /// then attention pooling and the dense head.
    pub fn build(model: &MilModel<E>, bag: &Bag<E>, target: Option<usize>) -> Result<BagGraph<E>> {
        if bag.instances.is_empty() {
            return Err(Error::Argument(format!("bag `{}` is empty", bag.sample_id)));
        }
        let mut order: Vec<&Instance<E>> = bag.instances.iter().collect();
        order.sort_by_key(|inst| inst.index);

        let embedding_mode = order[0].data.shape().len() == 1;
        let first_shape = order[0].data.shape().to_vec();
        for inst in &order {
            if inst.data.shape() != first_shape.as_slice() {
                return Err(Error::Shape(format!(
                    "bag `{}` mixes instance shapes {:?} and {:?}",
                    bag.sample_id,
                    first_shape,
                    inst.data.shape()
                )));
            }
        }
        if embedding_mode {
            if first_shape != [model.config.feature_dim] {
                return Err(Error::Shape(format!(
                    "embedding width {} does not match feature_dim {}",
                    first_shape[0], model.config.feature_dim
                )));
            }
        } else {
            if first_shape.len() != 3 || first_shape[0] != 3 {
                return Err(Error::Shape(format!(
                    "tile instances must be [3,H,W], got {first_shape:?}"
                )));
            }
        }

        let mut graph = Graph::new();
        let param_nodes: Vec<NodeId> = model
            .params
            .iter()
            .map(|(_, t)| graph.param(t.clone()))
            .collect();
        let n_blocks = model.config.backbone.len();
        let pid = |offset: usize| 2 * n_blocks + offset;

        let mut h_nodes = Vec::with_capacity(order.len());
        let mut last_act_nodes = Vec::new();
        for inst in &order {
            if embedding_mode {
                h_nodes.push(graph.input(inst.data.clone()));
                continue;
            }
            let mut x = graph.input(inst.data.clone());
            for b in 0..n_blocks {
                x = graph.conv2d(x, param_nodes[2 * b], param_nodes[2 * b + 1])?;
                x = graph.relu(x)?;
                if b == n_blocks - 1 {
                    last_act_nodes.push(x);
                }
                x = graph.maxpool2(x)?;
            }
            h_nodes.push(graph.global_avg_pool(x)?);
        }

        let n = h_nodes.len();
        let h_rows: Vec<NodeId> = h_nodes;
        let h_mat = graph.concat_rows(&h_rows)?; // [N, D]
        let scored = graph.matmul(h_mat, param_nodes[pid(0)])?; // [N, A]
        let squashed = graph.tanh_act(scored)?;
        let raw = graph.matmul(squashed, param_nodes[pid(1)])?; // [N, 1]
        let raw_vec = graph.reshape(raw, &[n])?;
        let attention_node = graph.softmax(raw_vec)?;
        let a_row = graph.reshape(attention_node, &[1, n])?;
        let pooled_node = graph.matmul(a_row, h_mat)?; // [1, D]

        let fc1 = graph.matmul(pooled_node, param_nodes[pid(2)])?;
        let fc1b = graph.add_bias(fc1, param_nodes[pid(3)])?;
        let hidden = graph.relu(fc1b)?;
        let fc2 = graph.matmul(hidden, param_nodes[pid(4)])?;
        let fc2b = graph.add_bias(fc2, param_nodes[pid(5)])?;
        let logits_node = graph.reshape(fc2b, &[model.config.n_classes])?;
        let probs_node = graph.softmax(logits_node)?;
        let loss_node = match target {
            Some(t) => Some(graph.cross_entropy(probs_node, t)?),
            None => None,
        };

        Ok(BagGraph {
            graph,
            param_nodes,
            last_act_nodes,
            attention_node,
            pooled_node,
            logits_node,
            probs_node,
            loss_node,
        })
    }
}

/// Eq-style bag pass: per-instance backbone features, non-gated attention
/// pooling, dense + softmax head.
pub fn forward_bag<E: Scalar>(model: &MilModel<E>, bag: &Bag<E>) -> Result<AttentionOutput<E>> {
    Ok(BagGraph::build(model, bag, None)?.output())
}

/// Identical to `forward_bag` with the backbone bypassed: instances are
/// precomputed feature vectors of width `feature_dim`.
pub fn forward_bag_embeddings<E: Scalar>(
    model: &MilModel<E>,
    bag: &Bag<E>,
) -> Result<AttentionOutput<E>> {
    if let Some(inst) = bag.instances.first() {
        if inst.data.shape().len() != 1 {
            return Err(Error::Shape(format!(
                "embedding bag expects 1-D instances, got {:?}",
                inst.data.shape()
            )));
        }
    }
    forward_bag(model, bag)
}

/// Bag score over all tiles of one sample, no augmentation.
pub fn infer_sample<E: Scalar>(model: &MilModel<E>, tiles: &[Tensor<E>]) -> Result<E> {
    if tiles.is_empty() {
        return Err(Error::Argument("infer_sample: no tiles".into()));
    }
    let bag = Bag::new("sample", tiles.to_vec(), None);
    Ok(forward_bag(model, &bag)?.score())
}

/// Confident single-tile classification.
#[derive(Debug, Clone, PartialEq)]
pub struct TileScore {
    pub tile_index: usize,
    /// singleton-bag hypoxic probability
    pub score: f64,
    pub class: TissueClass,
}

/// Pass each tile through the model as a singleton bag and keep it only if
/// either class reaches the confidence threshold.
pub fn score_single_tiles<E: Scalar>(
    model: &MilModel<E>,
    tiles: &[Tensor<E>],
    threshold: f64,
) -> Result<Vec<TileScore>> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::Argument(format!(
            "threshold {threshold} not in [0,1]"
        )));
    }
    let mut kept = Vec::new();
    for (i, tile) in tiles.iter().enumerate() {
        let bag = Bag::new("tile", vec![tile.clone()], None);
        let score = forward_bag(model, &bag)?.score().to_f64();
        if score >= threshold {
            kept.push(TileScore {
                tile_index: i,
                score,
                class: TissueClass::Hypoxic,
            });
        } else if 1.0 - score >= threshold {
            kept.push(TileScore {
                tile_index: i,
                score,
                class: TissueClass::Normoxic,
            });
        }
    }
    Ok(kept)
}
