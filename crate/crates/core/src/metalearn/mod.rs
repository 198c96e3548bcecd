//! Episodic meta-training, adaptation and evaluation.
//!
//! All meta-learners are first-order: the outer gradient never differentiates
//! through the inner SGD updates.

mod config;
mod eval;

use rand::Rng;
use rayon::prelude::*;

use crate::channel::ReceivedSignal;
use crate::codec::MessageBits;
use crate::decoder::{self, init_params, DecoderParams, HEAD};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream};
use crate::taskdist::{sample_episode, BenchmarkDataset, Episode};
use crate::tensor::checkpoint::Checkpoint;
use crate::tensor::{Adam, Tape, Tensor};

pub use config::{Algorithm, EpisodeShape, MetaConfig, DESK_ITERATIONS};
pub use eval::{evaluate, evaluate_viterbi, query_ber, summarize, Evaluation};

pub type Pair = (ReceivedSignal, MessageBits);

/// Learned initialization plus whatever else the algorithm learns.
#[derive(Clone, Debug)]
pub struct MetaState {
    pub algorithm: Algorithm,
    pub phi: DecoderParams,
    /// Per-parameter inner learning rates (MetaSGD only).
    pub alpha: Option<Vec<Tensor>>,
    pub outer: Adam,
    pub iteration: u64,
}

impl MetaState {
    pub fn new(cfg: &MetaConfig, k: usize, seed: u64) -> Self {
        let phi = init_params(k, seed);
        let alpha = (cfg.algorithm == Algorithm::MetaSgd)
            .then(|| phi.tensors.iter().map(|t| Tensor::full(t.shape(), cfg.inner_lr)).collect());
        Self { algorithm: cfg.algorithm, phi, alpha, outer: Adam::new(cfg.outer_lr), iteration: 0 }
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ck = self.phi.to_checkpoint(serde_json::json!({
            "algorithm": self.algorithm.name(),
            "iteration": self.iteration,
        }));
        if let Some(alpha) = &self.alpha {
            for (name, a) in DecoderParams::names().iter().zip(alpha) {
                ck.tensors.push((format!("alpha.{name}"), a.clone()));
            }
        }
        ck
    }

    /// Restore parameters from a checkpoint; the outer optimizer starts fresh.
    pub fn from_checkpoint(ck: &Checkpoint, outer_lr: f64) -> Result<Self> {
        let phi = DecoderParams::from_checkpoint(ck)?;
        let algorithm = ck
            .metadata
            .get("algorithm")
            .and_then(|v| v.as_str())
            .ok_or_else(|| Error::Format("checkpoint metadata lacks `algorithm`".into()))
            .and_then(Algorithm::parse)?;
        let iteration = ck.metadata.get("iteration").and_then(|v| v.as_u64()).unwrap_or(0);
        let alpha = if algorithm == Algorithm::MetaSgd {
            let a = DecoderParams::names()
                .iter()
                .map(|n| ck.get(&format!("alpha.{n}")).cloned().ok_or_else(|| Error::Format(format!("checkpoint lacks `alpha.{n}`"))))
                .collect::<Result<Vec<_>>>()?;
            Some(a)
        } else {
            None
        };
        Ok(Self { algorithm, phi, alpha, outer: Adam::new(outer_lr), iteration })
    }
}

fn trainable_for(algorithm: Algorithm) -> fn(usize) -> bool {
    match algorithm {
        Algorithm::Anil => |i| i >= HEAD,
        _ => |_| true,
    }
}

fn zeros_like(ts: &[Tensor]) -> Vec<Tensor> {
    ts.iter().map(|t| Tensor::zeros(t.shape())).collect()
}

fn add_into(acc: &mut [Tensor], xs: &[Tensor], scale: f64) {
    for (a, x) in acc.iter_mut().zip(xs) {
        a.data_mut().iter_mut().zip(x.data()).for_each(|(a, x)| *a += scale * x);
    }
}

/// Inner loop; returns θ and the gradient used by the last step.
fn adapt_trace(state: &MetaState, data: &[Pair], steps: usize, inner_lr: f64) -> Result<(DecoderParams, Vec<Tensor>)> {
    if data.is_empty() {
        return Err(Error::InsufficientData("adaptation needs a non-empty support set".into()));
    }
    let mut theta = state.phi.clone();
    let mut last = zeros_like(&theta.tensors);
    if state.algorithm == Algorithm::ProtoNets {
        return Ok((theta, last));
    }
    let mask = trainable_for(state.algorithm);
    for _ in 0..steps {
        let (_, g) = decoder::loss_and_grad(&theta, data, mask)?;
        for (i, (p, gi)) in theta.tensors.iter_mut().zip(&g).enumerate() {
            if !mask(i) {
                continue;
            }
            match &state.alpha {
                Some(alpha) => {
                    p.data_mut().iter_mut().zip(gi.data()).zip(alpha[i].data()).for_each(|((p, g), a)| *p -= a * g);
                }
                None => p.data_mut().iter_mut().zip(gi.data()).for_each(|(p, g)| *p -= inner_lr * g),
            }
        }
        last = g;
    }
    Ok((theta, last))
}

/// `steps` full-batch SGD updates of the support BCE starting from φ.
///
/// ANIL only updates the head, MetaSGD uses its learned per-parameter rates
/// instead of `inner_lr`, and ProtoNets returns φ unchanged.
pub fn adapt(state: &MetaState, support: &[Pair], steps: usize, inner_lr: f64) -> Result<DecoderParams> {
    adapt_trace(state, support, steps, inner_lr).map(|(t, _)| t)
}

fn check_batch(batch: &[Episode]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::InsufficientData("empty meta-batch".into()));
    }
    Ok(())
}

/// Mean over tasks of per-task gradients, computed in parallel and reduced
/// in task order.
fn mean_grads(per_task: Vec<(f64, Vec<Tensor>)>) -> (f64, Vec<Tensor>) {
    let n = per_task.len() as f64;
    let mut acc = zeros_like(&per_task[0].1);
    let mut loss = 0.0;
    for (l, g) in &per_task {
        add_into(&mut acc, g, 1.0 / n);
        loss += l / n;
    }
    (loss, acc)
}

/// Per-task outer gradients for the gradient-based first-order learners:
/// query gradient at the adapted θ (plus the α gradient for MetaSGD,
/// appended after the parameter gradients).
fn first_order_grads(state: &MetaState, cfg: &MetaConfig, batch: &[Episode]) -> Result<(f64, Vec<Tensor>)> {
    check_batch(batch)?;
    let per_task = batch
        .par_iter()
        .map(|ep| {
            let (theta, last) = adapt_trace(state, &ep.support, cfg.inner_steps, cfg.inner_lr)?;
            let (lq, mut gq) = decoder::loss_and_grad(&theta, &ep.query, |_| true)?;
            if state.alpha.is_some() {
                // θ_s = θ_{s−1} − α ∘ g_{s−1}, so ∂L/∂α = −g_query ∘ g_{s−1}
                let ga: Vec<Tensor> = gq
                    .iter()
                    .zip(&last)
                    .map(|(q, l)| {
                        let data = q.data().iter().zip(l.data()).map(|(q, l)| -q * l).collect();
                        Tensor::new(q.shape().to_vec(), data).expect("same shape")
                    })
                    .collect();
                gq.extend(ga);
            }
            Ok((lq, gq))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(mean_grads(per_task))
}

fn apply_outer(state: &mut MetaState, grads: Vec<Tensor>) {
    match state.alpha.take() {
        Some(alpha) => {
            let mut all: Vec<Tensor> = std::mem::take(&mut state.phi.tensors);
            all.extend(alpha);
            state.outer.step(&mut all, &grads);
            let alpha = all.split_off(HEAD + 2);
            state.phi.tensors = all;
            let alpha = alpha
                .into_iter()
                .map(|mut a| {
                    a.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
                    a
                })
                .collect();
            state.alpha = Some(alpha);
        }
        None => state.outer.step(&mut state.phi.tensors, &grads),
    }
    state.iteration += 1;
}

/// Outcome of one outer update.
#[derive(Clone, Debug, PartialEq)]
pub struct StepStats {
    /// Mean loss the outer gradient was taken of (query loss, or the inner
    /// data loss before adaptation for Reptile).
    pub loss: f64,
    /// Outer gradient (pseudo-gradient for Reptile) before the optimizer.
    pub grad_norm: f64,
}

fn norm(ts: &[Tensor]) -> f64 {
    ts.iter().flat_map(|t| t.data()).map(|v| v * v).sum::<f64>().sqrt()
}

/// First-order MAML: the query gradient at the adapted θ stands in for the
/// gradient with respect to φ.
pub fn meta_step_fomaml(state: &mut MetaState, cfg: &MetaConfig, batch: &[Episode]) -> Result<StepStats> {
    let (loss, g) = first_order_grads(state, cfg, batch)?;
    let grad_norm = norm(&g);
    apply_outer(state, g);
    Ok(StepStats { loss, grad_norm })
}

/// First-order ANIL: inner loop on the head only, outer update on everything.
pub fn meta_step_anil(state: &mut MetaState, cfg: &MetaConfig, batch: &[Episode]) -> Result<StepStats> {
    meta_step_fomaml(state, cfg, batch)
}

/// First-order MetaSGD: learns φ and per-parameter inner rates α ≥ 0.
pub fn meta_step_metasgd_fo(state: &mut MetaState, cfg: &MetaConfig, batch: &[Episode]) -> Result<StepStats> {
    if state.alpha.is_none() {
        return Err(Error::Config("MetaSGD state has no learning rates".into()));
    }
    meta_step_fomaml(state, cfg, batch)
}

/// Reptile: inner SGD on support ∪ query, then the outer optimizer is fed
/// `φ − mean(θ)` as a pseudo-gradient.
pub fn meta_step_reptile(state: &mut MetaState, cfg: &MetaConfig, batch: &[Episode]) -> Result<StepStats> {
    check_batch(batch)?;
    let per_task = batch
        .par_iter()
        .map(|ep| {
            let data = ep.all_pairs();
            let before = decoder::loss(&state.phi, &data)?;
            let (theta, _) = adapt_trace(state, &data, cfg.inner_steps, cfg.inner_lr)?;
            let diff = state
                .phi
                .tensors
                .iter()
                .zip(&theta.tensors)
                .map(|(p, t)| {
                    let d = p.data().iter().zip(t.data()).map(|(p, t)| p - t).collect();
                    Tensor::new(p.shape().to_vec(), d).expect("same shape")
                })
                .collect();
            Ok((before, diff))
        })
        .collect::<Result<Vec<_>>>()?;
    let (loss, g) = mean_grads(per_task);
    let grad_norm = norm(&g);
    apply_outer(state, g);
    Ok(StepStats { loss, grad_norm })
}

fn protonet_on_tape(phi: &DecoderParams, ep: &Episode, trainable: bool) -> Result<(Tape, crate::tensor::Var, Vec<crate::tensor::Var>)> {
    let k = phi.k;
    let mut tape = Tape::new();
    let vars = decoder::record_params(&mut tape, phi, |i| trainable && i < HEAD);
    let xs = tape.constant(decoder::batch_input(ep.support.iter().map(|p| &p.0), k)?);
    let xq = tape.constant(decoder::batch_input(ep.query.iter().map(|p| &p.0), k)?);
    let es = decoder::embed_on_tape(&mut tape, &vars, xs)?;
    let eq = decoder::embed_on_tape(&mut tape, &vars, xq)?;
    let bits: Vec<u8> = ep.support.iter().flat_map(|p| p.1.bits().iter().copied()).collect();
    let logits = tape.prototype_logits(eq, es, &bits)?;
    Ok((tape, logits, vars))
}

/// Multi-label ProtoNets query logits `[N_query, K]` for one episode.
pub fn protonet_multilabel(state: &MetaState, ep: &Episode) -> Result<Tensor> {
    if ep.support.is_empty() {
        return Err(Error::InsufficientData("prototypes need a non-empty support set".into()));
    }
    let (tape, logits, _) = protonet_on_tape(&state.phi, ep, false)?;
    Ok(tape.value(logits).clone())
}

/// ProtoNets: query BCE of the prototype logits, backpropagated into the
/// conv body.
pub fn meta_step_protonets(state: &mut MetaState, _cfg: &MetaConfig, batch: &[Episode]) -> Result<StepStats> {
    check_batch(batch)?;
    let per_task = batch
        .par_iter()
        .map(|ep| {
            let (mut tape, logits, vars) = protonet_on_tape(&state.phi, ep, true)?;
            let t = tape.constant(decoder::batch_targets(ep.query.iter().map(|p| &p.1), state.phi.k)?);
            let loss = tape.bce_with_logits(logits, t)?;
            tape.backward(loss)?;
            Ok((tape.value(loss).item(), vars.iter().map(|&v| tape.grad_or_zeros(v)).collect()))
        })
        .collect::<Result<Vec<_>>>()?;
    let (loss, g) = mean_grads(per_task);
    let grad_norm = norm(&g);
    apply_outer(state, g);
    Ok(StepStats { loss, grad_norm })
}

/// Plain Adam step on a pooled batch (the ERM baseline).
pub fn erm_step(state: &mut MetaState, batch: &[Pair]) -> Result<StepStats> {
    let (loss, g) = decoder::loss_and_grad(&state.phi, batch, |_| true)?;
    let grad_norm = norm(&g);
    apply_outer(state, g);
    Ok(StepStats { loss, grad_norm })
}

/// One outer update of whichever algorithm `state` runs.
pub fn meta_step(state: &mut MetaState, cfg: &MetaConfig, batch: &[Episode]) -> Result<StepStats> {
    match state.algorithm {
        Algorithm::Erm => {
            let pooled: Vec<Pair> = batch.iter().flat_map(Episode::all_pairs).collect();
            erm_step(state, &pooled)
        }
        Algorithm::Fomaml => meta_step_fomaml(state, cfg, batch),
        Algorithm::Anil => meta_step_anil(state, cfg, batch),
        Algorithm::MetaSgd => meta_step_metasgd_fo(state, cfg, batch),
        Algorithm::Reptile => meta_step_reptile(state, cfg, batch),
        Algorithm::ProtoNets => meta_step_protonets(state, cfg, batch),
    }
}

/// `n` examples drawn uniformly over every (setup, message, example) of `ds`.
pub fn sample_pooled<R: Rng + ?Sized>(ds: &BenchmarkDataset, n: usize, rng: &mut R) -> Vec<Pair> {
    let c = ds.counts;
    (0..n)
        .map(|_| {
            let s = rng.random_range(0..c.setups);
            let m = rng.random_range(0..c.messages);
            let e = rng.random_range(0..c.examples);
            (ds.signal(s, m, e), ds.message(s, m).clone())
        })
        .collect()
}

/// Meta-train on `ds` for `cfg.iterations` outer steps. `on_step` sees the
/// iteration index and its stats. Deterministic in `seed`.
pub fn train(
    cfg: &MetaConfig,
    ds: &BenchmarkDataset,
    seed: u64,
    mut on_step: impl FnMut(u64, &StepStats),
) -> Result<MetaState> {
    cfg.validate()?;
    let mut state = MetaState::new(cfg, ds.k, derive_seed(seed, "init"));
    let root = derive_seed(seed, "episodes");
    let e = cfg.episode;
    for it in 0..cfg.iterations {
        let mut rng = stream(root, it);
        let stats = if cfg.algorithm == Algorithm::Erm {
            let batch = sample_pooled(ds, cfg.erm_batch, &mut rng);
            erm_step(&mut state, &batch)?
        } else {
            let batch = (0..cfg.meta_batch)
                .map(|_| sample_episode(ds, e.n_way, e.k_shot, e.l_query, &mut rng))
                .collect::<Result<Vec<_>>>()?;
            meta_step(&mut state, cfg, &batch)?
        };
        on_step(it, &stats);
    }
    Ok(state)
}

/// ERM baseline: Adam on uniformly drawn pooled batches.
pub fn erm_train(ds: &BenchmarkDataset, iterations: u64, lr: f64, seed: u64) -> Result<DecoderParams> {
    let cfg = MetaConfig { algorithm: Algorithm::Erm, outer_lr: lr, iterations, ..MetaConfig::default() };
    train(&cfg, ds, seed, |_, _| {}).map(|s| s.phi)
}
