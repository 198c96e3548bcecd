//! CNN decoder: received signal → one logit per message bit.
//!
//! The `2K` received symbols are laid out as a `K × 2` single-channel image
//! (row `k` holds the two parity symbols of step `k`). Four 3×3 convolutions
//! with 64 filters follow, each with a ReLU; the first has stride (1, 2) and
//! collapses the width to 1, the rest keep the height at `K`. A 64 → 1
//! projection is then applied at each of the `K` positions.

use rand::Rng;

use crate::channel::ReceivedSignal;
use crate::codec::MessageBits;
use crate::error::{Error, Result};
use crate::rng::stream;
use crate::tensor::checkpoint::Checkpoint;
use crate::tensor::{Tape, Tensor, Var};

pub const FILTERS: usize = 64;
pub const KERNEL: usize = 3;
pub const CONV_LAYERS: usize = 4;
/// Index of the head weight in [`DecoderParams::tensors`]; the head bias follows.
pub const HEAD: usize = 2 * CONV_LAYERS;

const PARAM_NAMES: [&str; 10] = [
    "conv1.weight",
    "conv1.bias",
    "conv2.weight",
    "conv2.bias",
    "conv3.weight",
    "conv3.bias",
    "conv4.weight",
    "conv4.bias",
    "head.weight",
    "head.bias",
];

#[derive(Clone, Debug, PartialEq)]
pub struct DecoderParams {
    pub k: usize,
    /// conv1..conv4 (weight, bias) pairs, then head weight `[64, 1]` and bias `[1]`.
    pub tensors: Vec<Tensor>,
}

fn shapes() -> Vec<Vec<usize>> {
    let mut s = Vec::new();
    for layer in 0..CONV_LAYERS {
        let cin = if layer == 0 { 1 } else { FILTERS };
        s.push(vec![FILTERS, cin, KERNEL, KERNEL]);
        s.push(vec![FILTERS]);
    }
    s.push(vec![FILTERS, 1]);
    s.push(vec![1]);
    s
}

impl DecoderParams {
    pub fn zeros(k: usize) -> Self {
        Self { k, tensors: shapes().iter().map(|s| Tensor::zeros(s)).collect() }
    }

    pub fn names() -> &'static [&'static str] {
        &PARAM_NAMES
    }

    pub fn param_count(&self) -> usize {
        self.tensors.iter().map(Tensor::numel).sum()
    }

    /// Whether tensor `i` belongs to the convolutional body.
    pub fn is_body(i: usize) -> bool {
        i < HEAD
    }

    /// Flattened copy of every parameter.
    pub fn flat(&self) -> Vec<f64> {
        self.tensors.iter().flat_map(|t| t.data().iter().copied()).collect()
    }

    pub fn to_checkpoint(&self, metadata: serde_json::Value) -> Checkpoint {
        let mut meta = metadata;
        if let serde_json::Value::Object(m) = &mut meta {
            m.insert("k".into(), self.k.into());
        } else {
            meta = serde_json::json!({ "k": self.k });
        }
        Checkpoint {
            metadata: meta,
            tensors: PARAM_NAMES.iter().map(|n| n.to_string()).zip(self.tensors.iter().cloned()).collect(),
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let k = ck
            .metadata
            .get("k")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::Format("checkpoint metadata lacks `k`".into()))? as usize;
        let expect = shapes();
        let tensors = PARAM_NAMES
            .iter()
            .zip(&expect)
            .map(|(name, shape)| {
                let t = ck.get(name).ok_or_else(|| Error::Format(format!("checkpoint lacks `{name}`")))?;
                if t.shape() != shape.as_slice() {
                    return Err(Error::Format(format!("`{name}` has shape {:?}, expected {shape:?}", t.shape())));
                }
                Ok(t.clone())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { k, tensors })
    }
}

/// Fan-in scaled uniform initialization, `U(−1/√fan_in, 1/√fan_in)` for
/// weights and biases alike.
pub fn init_params(k: usize, seed: u64) -> DecoderParams {
    let mut rng = stream(seed, 0);
    let shapes = shapes();
    let tensors = shapes
        .iter()
        .enumerate()
        .map(|(i, shape)| {
            let w_shape = &shapes[i - i % 2];
            let fan_in: usize = if w_shape.len() == 4 { w_shape[1..].iter().product() } else { w_shape[0] };
            let bound = 1.0 / (fan_in as f64).sqrt();
            let n: usize = shape.iter().product();
            let data = (0..n).map(|_| rng.random_range(-bound..bound)).collect();
            Tensor::new(shape.clone(), data).expect("shape matches data")
        })
        .collect();
    DecoderParams { k, tensors }
}

/// Stack signals into the `[B, 1, K, 2]` input tensor.
pub fn batch_input<'a>(signals: impl IntoIterator<Item = &'a ReceivedSignal>, k: usize) -> Result<Tensor> {
    let mut data = Vec::new();
    let mut b = 0;
    for y in signals {
        if y.len() != 2 * k {
            return Err(Error::LengthMismatch { expected: 2 * k, actual: y.len() });
        }
        data.extend_from_slice(y.values());
        b += 1;
    }
    Tensor::new(vec![b, 1, k, 2], data)
}

/// Stack messages into a `[B, K]` target tensor.
pub fn batch_targets<'a>(messages: impl IntoIterator<Item = &'a MessageBits>, k: usize) -> Result<Tensor> {
    let mut data = Vec::new();
    let mut b = 0;
    for m in messages {
        if m.len() != k {
            return Err(Error::LengthMismatch { expected: k, actual: m.len() });
        }
        data.extend(m.bits().iter().map(|&x| f64::from(x)));
        b += 1;
    }
    Tensor::new(vec![b, k], data)
}

/// Record the parameters on `tape`; `trainable[i]` selects which get grads.
pub fn record_params(tape: &mut Tape, params: &DecoderParams, trainable: impl Fn(usize) -> bool) -> Vec<Var> {
    params.tensors.iter().enumerate().map(|(i, t)| tape.leaf(t.clone(), trainable(i))).collect()
}

/// Conv body on the tape: `[B, 1, K, 2]` → `[B, 64, K, 1]`.
pub fn embed_on_tape(tape: &mut Tape, vars: &[Var], x: Var) -> Result<Var> {
    let mut h = x;
    for layer in 0..CONV_LAYERS {
        let stride = if layer == 0 { (1, 2) } else { (1, 1) };
        h = tape.conv2d(h, vars[2 * layer], vars[2 * layer + 1], stride, (1, 1))?;
        h = tape.relu(h)?;
    }
    Ok(h)
}

/// Full network on the tape: `[B, 1, K, 2]` → logits `[B, K]`.
pub fn forward_on_tape(tape: &mut Tape, vars: &[Var], x: Var) -> Result<Var> {
    let b = tape.value(x).shape()[0];
    let k = tape.value(x).shape()[2];
    let h = embed_on_tape(tape, vars, x)?;
    let w = tape.reshape(vars[HEAD], &[1, FILTERS, 1, 1])?;
    let out = tape.conv2d(h, w, vars[HEAD + 1], (1, 1), (0, 0))?;
    tape.reshape(out, &[b, k])
}

/// Logits `[B, K]` for a batch of signals.
pub fn forward_batch(params: &DecoderParams, signals: &[ReceivedSignal]) -> Result<Tensor> {
    let mut tape = Tape::new();
    let vars = record_params(&mut tape, params, |_| false);
    let x = tape.constant(batch_input(signals, params.k)?);
    let y = forward_on_tape(&mut tape, &vars, x)?;
    Ok(tape.value(y).clone())
}

/// Logits for one received signal.
pub fn forward(params: &DecoderParams, y: &ReceivedSignal) -> Result<Vec<f64>> {
    Ok(forward_batch(params, std::slice::from_ref(y))?.into_data())
}

/// `bit_k = 1` iff `logit_k > 0`, so a zero logit decodes to 0.
pub fn predict_bits(logits: &[f64]) -> MessageBits {
    MessageBits::new(logits.iter().map(|&l| u8::from(l > 0.0)).collect()).expect("bits are binary")
}

/// Mean BCE of `params` on `(signal, message)` pairs, and its gradient with
/// respect to the tensors selected by `trainable` (zeros elsewhere).
pub fn loss_and_grad(
    params: &DecoderParams,
    batch: &[(ReceivedSignal, MessageBits)],
    trainable: impl Fn(usize) -> bool,
) -> Result<(f64, Vec<Tensor>)> {
    if batch.is_empty() {
        return Err(Error::InsufficientData("empty batch".into()));
    }
    let mut tape = Tape::new();
    let vars = record_params(&mut tape, params, trainable);
    let x = tape.constant(batch_input(batch.iter().map(|p| &p.0), params.k)?);
    let t = tape.constant(batch_targets(batch.iter().map(|p| &p.1), params.k)?);
    let logits = forward_on_tape(&mut tape, &vars, x)?;
    let loss = tape.bce_with_logits(logits, t)?;
    tape.backward(loss)?;
    let grads = vars.iter().map(|&v| tape.grad_or_zeros(v)).collect();
    Ok((tape.value(loss).item(), grads))
}

/// Mean BCE without gradients.
pub fn loss(params: &DecoderParams, batch: &[(ReceivedSignal, MessageBits)]) -> Result<f64> {
    loss_and_grad(params, batch, |_| false).map(|(l, _)| l)
}
