use crate::autograd::tensor::{Scalar, Tensor};
use crate::error::{Error, Result};

pub type NodeId = usize;

/// Probability floor applied before the cross-entropy log.
pub const CE_CLAMP_MIN: f64 = 1e-7;

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    /// 3x3 convolution, stride 1, zero padding 1 ("same" output size).
    Conv2d {
        input: NodeId,
        kernel: NodeId,
        bias: NodeId,
    },
    Relu {
        input: NodeId,
    },
    TanhAct {
        input: NodeId,
    },
    /// 2x2 non-overlapping max pool; odd trailing row/column dropped.
    MaxPool2 {
        input: NodeId,
        argmax: Vec<u32>,
    },
    /// Global average pool [C,H,W] -> [C].
    Gap {
        input: NodeId,
    },
    MatMul {
        a: NodeId,
        b: NodeId,
    },
    /// [M,N] + [N], bias broadcast over rows.
    AddBias {
        x: NodeId,
        bias: NodeId,
    },
    Reshape {
        input: NodeId,
    },
    /// Stack K same-length vectors into [K,D].
    ConcatRows {
        inputs: Vec<NodeId>,
    },
    /// Numerically stable softmax over a 1-D tensor.
    Softmax {
        input: NodeId,
    },
    /// -ln(clamp(probs[target])) as a scalar.
    CrossEntropy {
        probs: NodeId,
        target: usize,
    },
}

#[derive(Debug)]
struct Node<E: Scalar> {
    op: Op,
    value: Tensor<E>,
    needs_grad: bool,
}

/// Append-only compute graph. Node creation order is a topological order,
/// so the reverse sweep in `backward` is deterministic.
#[derive(Debug)]
pub struct Graph<E: Scalar> {
    nodes: Vec<Node<E>>,
    grads: Vec<Option<Tensor<E>>>,
}

impl<E: Scalar> Graph<E> {
    pub fn new() -> Self {
        Graph {
            nodes: Vec::new(),
            grads: Vec::new(),
        }
    }

    /// Constant input; no gradient is computed for it or solely through it.
    pub fn input(&mut self, value: Tensor<E>) -> NodeId {
        self.push_unchecked(Op::Leaf, value, false)
    }

    /// Trainable leaf; `backward` populates its gradient.
    pub fn param(&mut self, value: Tensor<E>) -> NodeId {
        self.push_unchecked(Op::Leaf, value, true)
    }

    pub fn value(&self, id: NodeId) -> &Tensor<E> {
        &self.nodes[id].value
    }

    /// Gradient of the most recent backward sweep, if the node received one.
    pub fn grad(&self, id: NodeId) -> Option<&Tensor<E>> {
        self.grads.get(id).and_then(|g| g.as_ref())
    }

    /// Gradient of the most recent backward sweep; a node the sweep never
    /// touched has an exactly-zero gradient.
    pub fn grad_or_zero(&self, id: NodeId) -> Tensor<E> {
        match self.grad(id) {
            Some(g) => g.clone(),
            None => Tensor::zeros(self.value(id).shape()),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push_unchecked(&mut self, op: Op, value: Tensor<E>, needs_grad: bool) -> NodeId {
        self.nodes.push(Node {
            op,
            value,
            needs_grad,
        });
        self.nodes.len() - 1
    }

    /// For ops whose outputs are drawn from their (already validated)
    /// inputs or a bounded range: relu, maxpool, reshape, concat pass
    /// values through, tanh lands in (-1, 1). They cannot introduce
    /// non-finite values, so the finiteness scan is skipped.
    fn push_preserving(
        &mut self,
        op_name: &'static str,
        op: Op,
        value: Tensor<E>,
    ) -> Result<NodeId> {
        let _ = op_name;
        let needs_grad = self.op_needs_grad(&op);
        Ok(self.push_unchecked(op, value, needs_grad))
    }

    fn push(&mut self, op_name: &'static str, op: Op, value: Tensor<E>) -> Result<NodeId> {
        if !value.all_finite() {
            return Err(Error::NonFinite { op: op_name });
        }
        let needs_grad = self.op_needs_grad(&op);
        Ok(self.push_unchecked(op, value, needs_grad))
    }

    fn op_needs_grad(&self, op: &Op) -> bool {
        match op {
            Op::Leaf => false,
            Op::Conv2d {
                input,
                kernel,
                bias,
            } => self.needs(*input) || self.needs(*kernel) || self.needs(*bias),
            Op::Relu { input }
            | Op::TanhAct { input }
            | Op::MaxPool2 { input, .. }
            | Op::Gap { input }
            | Op::Reshape { input }
            | Op::Softmax { input } => self.needs(*input),
            Op::MatMul { a, b } => self.needs(*a) || self.needs(*b),
            Op::AddBias { x, bias } => self.needs(*x) || self.needs(*bias),
            Op::ConcatRows { inputs } => inputs.iter().any(|&i| self.needs(i)),
            Op::CrossEntropy { probs, .. } => self.needs(*probs),
        }
    }

    fn needs(&self, id: NodeId) -> bool {
        self.nodes[id].needs_grad
    }

    fn chw(&self, id: NodeId, op: &'static str) -> Result<(usize, usize, usize)> {
        match self.value(id).shape() {
            [c, h, w] => Ok((*c, *h, *w)),
            s => Err(Error::Shape(format!("{op}: expected [C,H,W], got {s:?}"))),
        }
    }

    // ── forward ops ─────────────────────────────────────────────────────

    pub fn conv2d(&mut self, input: NodeId, kernel: NodeId, bias: NodeId) -> Result<NodeId> {
        let (c_in, h, w) = self.chw(input, "conv2d")?;
        let (c_out, kc_in) = match self.value(kernel).shape() {
            [co, ci, 3, 3] => (*co, *ci),
            s => {
                return Err(Error::Shape(format!(
                    "conv2d: kernel must be [C_out,C_in,3,3], got {s:?}"
                )))
            }
        };
        if kc_in != c_in {
            return Err(Error::Shape(format!(
                "conv2d: input has {c_in} channels but kernel expects {kc_in}"
            )));
        }
        if self.value(bias).shape() != [c_out] {
            return Err(Error::Shape(format!(
                "conv2d: bias shape {:?} does not match {c_out} output channels",
                self.value(bias).shape()
            )));
        }
        let mut out = Tensor::zeros(&[c_out, h, w]);
        conv2d_forward(
            self.value(input).data(),
            c_in,
            h,
            w,
            self.value(kernel).data(),
            c_out,
            self.value(bias).data(),
            out.data_mut(),
        );
        self.push(
            "conv2d",
            Op::Conv2d {
                input,
                kernel,
                bias,
            },
            out,
        )
    }

    pub fn relu(&mut self, input: NodeId) -> Result<NodeId> {
        let mut out = self.value(input).clone();
        for x in out.data_mut() {
            *x = x.maximum(E::ZERO);
        }
        self.push_preserving("relu", Op::Relu { input }, out)
    }

    pub fn tanh_act(&mut self, input: NodeId) -> Result<NodeId> {
        let mut out = self.value(input).clone();
        for x in out.data_mut() {
            *x = x.tanh();
        }
        self.push_preserving("tanh_act", Op::TanhAct { input }, out)
    }

    pub fn maxpool2(&mut self, input: NodeId) -> Result<NodeId> {
        let (c, h, w) = self.chw(input, "maxpool2")?;
        let (oh, ow) = (h / 2, w / 2);
        if oh == 0 || ow == 0 {
            return Err(Error::Shape(format!("maxpool2: input {h}x{w} too small")));
        }
        let inp = self.value(input).data();
        let mut out = Tensor::zeros(&[c, oh, ow]);
        let mut argmax = vec![0u32; c * oh * ow];
        {
            let od = out.data_mut();
            for ch in 0..c {
                let base = ch * h * w;
                for oy in 0..oh {
                    for ox in 0..ow {
                        // first maximum in window scan order wins
                        let mut best_idx = base + (2 * oy) * w + 2 * ox;
                        let mut best = inp[best_idx];
                        for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                            let idx = base + (2 * oy + dy) * w + 2 * ox + dx;
                            if inp[idx] > best {
                                best = inp[idx];
                                best_idx = idx;
                            }
                        }
                        let o = (ch * oh + oy) * ow + ox;
                        od[o] = best;
                        argmax[o] = best_idx as u32;
                    }
                }
            }
        }
        self.push_preserving("maxpool2", Op::MaxPool2 { input, argmax }, out)
    }

    pub fn global_avg_pool(&mut self, input: NodeId) -> Result<NodeId> {
        let (c, h, w) = self.chw(input, "global_avg_pool")?;
        let inp = self.value(input).data();
        let inv = E::from_f64(1.0 / (h * w) as f64);
        let mut out = Tensor::zeros(&[c]);
        for ch in 0..c {
            let mut acc = E::ZERO;
            for &v in &inp[ch * h * w..(ch + 1) * h * w] {
                acc += v;
            }
            out[ch] = acc * inv;
        }
        self.push("global_avg_pool", Op::Gap { input }, out)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (m, k) = match self.value(a).shape() {
            [m, k] => (*m, *k),
            s => return Err(Error::Shape(format!("matmul: lhs must be 2-D, got {s:?}"))),
        };
        let (kb, n) = match self.value(b).shape() {
            [k, n] => (*k, *n),
            s => return Err(Error::Shape(format!("matmul: rhs must be 2-D, got {s:?}"))),
        };
        if k != kb {
            return Err(Error::Shape(format!("matmul: inner dims {k} vs {kb}")));
        }
        let mut out = Tensor::zeros(&[m, n]);
        matmul_forward(
            self.value(a).data(),
            self.value(b).data(),
            m,
            k,
            n,
            out.data_mut(),
        );
        self.push("matmul", Op::MatMul { a, b }, out)
    }

    pub fn add_bias(&mut self, x: NodeId, bias: NodeId) -> Result<NodeId> {
        let (m, n) = match self.value(x).shape() {
            [m, n] => (*m, *n),
            s => {
                return Err(Error::Shape(format!(
                    "add_bias: lhs must be 2-D, got {s:?}"
                )))
            }
        };
        if self.value(bias).shape() != [n] {
            return Err(Error::Shape(format!(
                "add_bias: bias {:?} does not match row width {n}",
                self.value(bias).shape()
            )));
        }
        let mut out = self.value(x).clone();
        {
            let bd = self.value(bias).data().to_vec();
            let od = out.data_mut();
            for i in 0..m {
                for j in 0..n {
                    od[i * n + j] += bd[j];
                }
            }
        }
        self.push("add_bias", Op::AddBias { x, bias }, out)
    }

    pub fn reshape(&mut self, input: NodeId, shape: &[usize]) -> Result<NodeId> {
        let out = self.value(input).reshaped(shape)?;
        self.push_preserving("reshape", Op::Reshape { input }, out)
    }

    pub fn concat_rows(&mut self, inputs: &[NodeId]) -> Result<NodeId> {
        if inputs.is_empty() {
            return Err(Error::Argument("concat_rows: no inputs".into()));
        }
        let d = self.value(inputs[0]).len();
        let mut data = Vec::with_capacity(inputs.len() * d);
        for &id in inputs {
            let t = self.value(id);
            if t.len() != d {
                return Err(Error::Shape(format!(
                    "concat_rows: row lengths differ ({d} vs {})",
                    t.len()
                )));
            }
            data.extend_from_slice(t.data());
        }
        let out = Tensor::from_vec(&[inputs.len(), d], data)?;
        self.push_preserving(
            "concat_rows",
            Op::ConcatRows {
                inputs: inputs.to_vec(),
            },
            out,
        )
    }

    pub fn softmax(&mut self, input: NodeId) -> Result<NodeId> {
        let t = self.value(input);
        if t.shape().len() != 1 {
            return Err(Error::Shape(format!(
                "softmax: expected 1-D, got {:?}",
                t.shape()
            )));
        }
        if !t.all_finite() {
            return Err(Error::NonFinite { op: "softmax" });
        }
        let mut out = t.clone();
        softmax_in_place(out.data_mut());
        self.push("softmax", Op::Softmax { input }, out)
    }

    pub fn cross_entropy(&mut self, probs: NodeId, target: usize) -> Result<NodeId> {
        let t = self.value(probs);
        if t.shape().len() != 1 {
            return Err(Error::Shape(format!(
                "cross_entropy: expected 1-D, got {:?}",
                t.shape()
            )));
        }
        if target >= t.len() {
            return Err(Error::Argument(format!(
                "cross_entropy: target {target} out of range for {} classes",
                t.len()
            )));
        }
        let clamp_min = E::from_f64(CE_CLAMP_MIN);
        let p = t[target].maximum(clamp_min);
        let p = if p > E::ONE { E::ONE } else { p };
        let loss = Tensor::scalar(-p.ln());
        self.push("cross_entropy", Op::CrossEntropy { probs, target }, loss)
    }

    // ── backward ────────────────────────────────────────────────────────

    /// Reverse sweep from a scalar loss node.
    pub fn backward(&mut self, loss: NodeId) -> Result<()> {
        if self.value(loss).len() != 1 {
            return Err(Error::Argument(format!(
                "backward: loss must be scalar, got shape {:?}",
                self.value(loss).shape()
            )));
        }
        let seed = Tensor::filled(self.value(loss).shape(), E::ONE);
        self.backward_from(loss, seed)
    }

    /// Reverse sweep seeded with an arbitrary cotangent at `node`.
    pub fn backward_from(&mut self, node: NodeId, seed: Tensor<E>) -> Result<()> {
        if seed.shape() != self.value(node).shape() {
            return Err(Error::Shape(format!(
                "backward_from: seed shape {:?} does not match node shape {:?}",
                seed.shape(),
                self.value(node).shape()
            )));
        }
        let mut grads: Vec<Option<Tensor<E>>> = Vec::with_capacity(self.nodes.len());
        grads.resize_with(self.nodes.len(), || None);
        grads[node] = Some(seed);
        for i in (0..=node).rev() {
            let (ghead, gtail) = grads.split_at_mut(i);
            let Some(gout) = gtail[0].as_ref() else {
                continue;
            };
            self.propagate(i, gout, ghead);
        }
        self.grads = grads;
        Ok(())
    }

    /// Add this node's contribution to each differentiable input's gradient.
    /// Inputs always precede the node on the tape, so they live in `ghead`.
    fn propagate(&self, i: NodeId, gout: &Tensor<E>, ghead: &mut [Option<Tensor<E>>]) {
        let ensure = |g: &mut [Option<Tensor<E>>], id: NodeId, shape: &[usize]| {
            if g[id].is_none() {
                g[id] = Some(Tensor::zeros(shape));
            }
        };
        match &self.nodes[i].op {
            Op::Leaf => {}
            Op::Conv2d {
                input,
                kernel,
                bias,
            } => {
                let (c_in, h, w) = match self.value(*input).shape() {
                    [c, h, w] => (*c, *h, *w),
                    _ => unreachable!(),
                };
                let c_out = self.value(*kernel).shape()[0];
                if self.needs(*input) {
                    ensure(ghead, *input, self.value(*input).shape());
                    conv2d_backward_input(
                        gout.data(),
                        self.value(*kernel).data(),
                        c_in,
                        c_out,
                        h,
                        w,
                        ghead[*input].as_mut().unwrap().data_mut(),
                    );
                }
                if self.needs(*kernel) {
                    ensure(ghead, *kernel, self.value(*kernel).shape());
                    conv2d_backward_kernel(
                        gout.data(),
                        self.value(*input).data(),
                        c_in,
                        c_out,
                        h,
                        w,
                        ghead[*kernel].as_mut().unwrap().data_mut(),
                    );
                }
                if self.needs(*bias) {
                    ensure(ghead, *bias, &[c_out]);
                    let gb = ghead[*bias].as_mut().unwrap().data_mut();
                    for (co, b) in gb.iter_mut().enumerate() {
                        let mut acc = E::ZERO;
                        for &g in &gout.data()[co * h * w..(co + 1) * h * w] {
                            acc += g;
                        }
                        *b += acc;
                    }
                }
            }
            Op::Relu { input } => {
                if self.needs(*input) {
                    ensure(ghead, *input, self.value(*input).shape());
                    let xv = self.value(*input).data();
                    let gi = ghead[*input].as_mut().unwrap().data_mut();
                    for k in 0..xv.len() {
                        if xv[k] > E::ZERO {
                            gi[k] += gout.data()[k];
                        }
                    }
                }
            }
            Op::TanhAct { input } => {
                if self.needs(*input) {
                    ensure(ghead, *input, self.value(*input).shape());
                    let yv = self.value(i).data();
                    let gi = ghead[*input].as_mut().unwrap().data_mut();
                    for k in 0..yv.len() {
                        gi[k] += gout.data()[k] * (E::ONE - yv[k] * yv[k]);
                    }
                }
            }
            Op::MaxPool2 { input, argmax } => {
                if self.needs(*input) {
                    ensure(ghead, *input, self.value(*input).shape());
                    let gi = ghead[*input].as_mut().unwrap().data_mut();
                    for (o, &src) in argmax.iter().enumerate() {
                        gi[src as usize] += gout.data()[o];
                    }
                }
            }
            Op::Gap { input } => {
                if self.needs(*input) {
                    ensure(ghead, *input, self.value(*input).shape());
                    let (_, h, w) = match self.value(*input).shape() {
                        [c, h, w] => (*c, *h, *w),
                        _ => unreachable!(),
                    };
                    let inv = E::from_f64(1.0 / (h * w) as f64);
                    let gi = ghead[*input].as_mut().unwrap().data_mut();
                    for (ch, &g) in gout.data().iter().enumerate() {
                        let spread = g * inv;
                        for v in &mut gi[ch * h * w..(ch + 1) * h * w] {
                            *v += spread;
                        }
                    }
                }
            }
            Op::MatMul { a, b } => {
                let (m, k) = match self.value(*a).shape() {
                    [m, k] => (*m, *k),
                    _ => unreachable!(),
                };
                let n = self.value(*b).shape()[1];
                if self.needs(*a) {
                    ensure(ghead, *a, self.value(*a).shape());
                    let bd = self.value(*b).data();
                    let ga = ghead[*a].as_mut().unwrap().data_mut();
                    // dA[i][p] += sum_j gout[i][j] * B[p][j]
                    for row in 0..m {
                        for p in 0..k {
                            let mut acc = E::ZERO;
                            let go = &gout.data()[row * n..(row + 1) * n];
                            let br = &bd[p * n..(p + 1) * n];
                            for j in 0..n {
                                acc += go[j] * br[j];
                            }
                            ga[row * k + p] += acc;
                        }
                    }
                }
                if self.needs(*b) {
                    ensure(ghead, *b, self.value(*b).shape());
                    let ad = self.value(*a).data();
                    let gb = ghead[*b].as_mut().unwrap().data_mut();
                    // dB[p][j] += sum_i A[i][p] * gout[i][j]
                    for row in 0..m {
                        let go = &gout.data()[row * n..(row + 1) * n];
                        for p in 0..k {
                            let av = ad[row * k + p];
                            let gbr = &mut gb[p * n..(p + 1) * n];
                            for j in 0..n {
                                gbr[j] += av * go[j];
                            }
                        }
                    }
                }
            }
            Op::AddBias { x, bias } => {
                let (m, n) = match self.value(*x).shape() {
                    [m, n] => (*m, *n),
                    _ => unreachable!(),
                };
                if self.needs(*x) {
                    ensure(ghead, *x, self.value(*x).shape());
                    let gx = ghead[*x].as_mut().unwrap().data_mut();
                    for (g, v) in gout.data().iter().zip(gx.iter_mut()) {
                        *v += *g;
                    }
                }
                if self.needs(*bias) {
                    ensure(ghead, *bias, &[n]);
                    let gb = ghead[*bias].as_mut().unwrap().data_mut();
                    for row in 0..m {
                        for (b, &g) in gb.iter_mut().zip(&gout.data()[row * n..(row + 1) * n]) {
                            *b += g;
                        }
                    }
                }
            }
            Op::Reshape { input } => {
                if self.needs(*input) {
                    ensure(ghead, *input, self.value(*input).shape());
                    let gi = ghead[*input].as_mut().unwrap().data_mut();
                    for (g, v) in gout.data().iter().zip(gi.iter_mut()) {
                        *v += *g;
                    }
                }
            }
            Op::ConcatRows { inputs } => {
                let d = self.value(inputs[0]).len();
                for (row, &id) in inputs.iter().enumerate() {
                    if self.needs(id) {
                        ensure(ghead, id, self.value(id).shape());
                        let gi = ghead[id].as_mut().unwrap().data_mut();
                        for (g, v) in gout.data()[row * d..(row + 1) * d]
                            .iter()
                            .zip(gi.iter_mut())
                        {
                            *v += *g;
                        }
                    }
                }
            }
            Op::Softmax { input } => {
                if self.needs(*input) {
                    ensure(ghead, *input, self.value(*input).shape());
                    let s = self.value(i).data();
                    let mut dot = E::ZERO;
                    for (&g, &sv) in gout.data().iter().zip(s) {
                        dot += g * sv;
                    }
                    let gi = ghead[*input].as_mut().unwrap().data_mut();
                    for ((v, &sv), &g) in gi.iter_mut().zip(s).zip(gout.data()) {
                        *v += sv * (g - dot);
                    }
                }
            }
            Op::CrossEntropy { probs, target } => {
                if self.needs(*probs) {
                    ensure(ghead, *probs, self.value(*probs).shape());
                    let p = self.value(*probs)[*target];
                    // zero slope inside the clamped region
                    if p.to_f64() >= CE_CLAMP_MIN {
                        let g = gout.data()[0];
                        ghead[*probs].as_mut().unwrap()[*target] += -(E::ONE / p) * g;
                    }
                }
            }
        }
    }
}

impl<E: Scalar> Default for Graph<E> {
    fn default() -> Self {
        Self::new()
    }
}

/// Softmax with max subtraction; operates on a flat vector.
pub fn softmax_in_place<E: Scalar>(x: &mut [E]) {
    let mut mx = x[0];
    for &v in x.iter() {
        mx = mx.maximum(v);
    }
    let mut sum = E::ZERO;
    for v in x.iter_mut() {
        *v = (*v - mx).exp();
        sum += *v;
    }
    for v in x.iter_mut() {
        *v = *v / sum;
    }
}

// ── raw kernels ─────────────────────────────────────────────────────────
//
// All three conv kernels iterate per (c_out, c_in, ky, kx) tap and sweep
// contiguous rows, which keeps the inner loops vectorizable.

/// `out += stencil(in)` with a 3x3 kernel and same-size zero padding. One
/// pass per output row keeps the nine tap weights in registers and the
/// interior loop vectorizable; column edges are peeled.
fn stencil3_add<E: Scalar>(inp: &[E], h: usize, w: usize, k: &[E], out: &mut [E]) {
    if w == 1 {
        for (y, o) in out.iter_mut().enumerate() {
            for (ky, &kv) in [k[1], k[4], k[7]].iter().enumerate() {
                let sy = y as isize + ky as isize - 1;
                if sy >= 0 && sy < h as isize {
                    *o += kv * inp[sy as usize];
                }
            }
        }
        return;
    }
    let last = w - 1;
    for y in 0..h {
        let orow = &mut out[y * w..(y + 1) * w];
        for ky in 0..3usize {
            let sy = y as isize + ky as isize - 1;
            if sy < 0 || sy >= h as isize {
                continue;
            }
            let irow = &inp[sy as usize * w..(sy as usize + 1) * w];
            let (k0, k1, k2) = (k[ky * 3], k[ky * 3 + 1], k[ky * 3 + 2]);
            orow[0] += k1 * irow[0] + k2 * irow[1];
            orow[last] += k0 * irow[last - 1] + k1 * irow[last];
            let (dst, lefts, mids, rights) = (
                &mut orow[1..last],
                &irow[..last - 1],
                &irow[1..last],
                &irow[2..],
            );
            for i in 0..dst.len() {
                dst[i] += k0 * lefts[i] + k1 * mids[i] + k2 * rights[i];
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn conv2d_forward<E: Scalar>(
    inp: &[E],
    c_in: usize,
    h: usize,
    w: usize,
    ker: &[E],
    c_out: usize,
    bias: &[E],
    out: &mut [E],
) {
    for co in 0..c_out {
        let op = &mut out[co * h * w..(co + 1) * h * w];
        op.fill(bias[co]);
        for ci in 0..c_in {
            let ip = &inp[ci * h * w..(ci + 1) * h * w];
            let k = &ker[(co * c_in + ci) * 9..(co * c_in + ci) * 9 + 9];
            stencil3_add(ip, h, w, k, op);
        }
    }
}

/// The input gradient is the output gradient convolved with the
/// spatially flipped kernel, accumulated over output channels.
pub(crate) fn conv2d_backward_input<E: Scalar>(
    gout: &[E],
    ker: &[E],
    c_in: usize,
    c_out: usize,
    h: usize,
    w: usize,
    ginp: &mut [E],
) {
    let mut flipped = [E::ZERO; 9];
    for ci in 0..c_in {
        let gi = &mut ginp[ci * h * w..(ci + 1) * h * w];
        for co in 0..c_out {
            let k = &ker[(co * c_in + ci) * 9..(co * c_in + ci) * 9 + 9];
            for (i, f) in flipped.iter_mut().enumerate() {
                *f = k[8 - i];
            }
            let gp = &gout[co * h * w..(co + 1) * h * w];
            stencil3_add(gp, h, w, &flipped, gi);
        }
    }
}

/// Dot product split over eight fixed-position partial sums. The grouping
/// is constant, so results stay bit-reproducible while the independent
/// accumulators let the compiler vectorize the reduction.
#[inline]
fn dot8<E: Scalar>(a: &[E], b: &[E]) -> E {
    let mut lanes = [E::ZERO; 8];
    let chunks = a.len() / 8;
    for i in 0..chunks {
        let (ar, br) = (&a[i * 8..i * 8 + 8], &b[i * 8..i * 8 + 8]);
        for k in 0..8 {
            lanes[k] += ar[k] * br[k];
        }
    }
    let mut tail = E::ZERO;
    for i in chunks * 8..a.len() {
        tail += a[i] * b[i];
    }
    let pair01 = lanes[0] + lanes[1];
    let pair23 = lanes[2] + lanes[3];
    let pair45 = lanes[4] + lanes[5];
    let pair67 = lanes[6] + lanes[7];
    ((pair01 + pair23) + (pair45 + pair67)) + tail
}

pub(crate) fn conv2d_backward_kernel<E: Scalar>(
    gout: &[E],
    inp: &[E],
    c_in: usize,
    c_out: usize,
    h: usize,
    w: usize,
    gker: &mut [E],
) {
    for co in 0..c_out {
        let gp = &gout[co * h * w..(co + 1) * h * w];
        for ci in 0..c_in {
            let ip = &inp[ci * h * w..(ci + 1) * h * w];
            for ky in 0..3usize {
                for kx in 0..3usize {
                    let dy = ky as isize - 1;
                    let dx = kx as isize - 1;
                    let y0 = (-dy).max(0) as usize;
                    let y1 = (h as isize - dy).min(h as isize) as usize;
                    let x0 = (-dx).max(0) as usize;
                    let x1 = (w as isize - dx).min(w as isize) as usize;
                    if x0 >= x1 {
                        continue;
                    }
                    let mut acc = E::ZERO;
                    for y in y0..y1 {
                        let sy = (y as isize + dy) as usize;
                        let sx = (x0 as isize + dx) as usize;
                        let grow = &gp[y * w + x0..y * w + x1];
                        let irow = &ip[sy * w + sx..sy * w + sx + (x1 - x0)];
                        acc += dot8(grow, irow);
                    }
                    gker[((co * c_in + ci) * 3 + ky) * 3 + kx] += acc;
                }
            }
        }
    }
}

pub(crate) fn matmul_forward<E: Scalar>(
    a: &[E],
    b: &[E],
    m: usize,
    k: usize,
    n: usize,
    out: &mut [E],
) {
    for i in 0..m {
        let orow = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let av = a[i * k + p];
            let brow = &b[p * n..(p + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow.iter()) {
                *o += av * bv;
            }
        }
    }
}
