use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{adapt, protonet_multilabel, Algorithm, MetaConfig, MetaState, Pair};
use crate::codec::viterbi_decode;
use crate::decoder::{self, predict_bits, DecoderParams};
use crate::error::{Error, Result};
use crate::taskdist::Episode;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub mean_ber: f64,
    /// Sample standard deviation of the per-episode BERs over √episodes.
    pub stderr: f64,
    pub episode_bers: Vec<f64>,
}

pub fn summarize(bers: Vec<f64>) -> Result<Evaluation> {
    if bers.is_empty() {
        return Err(Error::InsufficientData("evaluation needs at least one episode".into()));
    }
    let n = bers.len() as f64;
    let mean = bers.iter().sum::<f64>() / n;
    let stderr = if bers.len() > 1 {
        let var = bers.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(Evaluation { mean_ber: mean, stderr, episode_bers: bers })
}

fn count_errors(pred: &[u8], truth: &[u8]) -> usize {
    pred.iter().zip(truth).filter(|(a, b)| a != b).count()
}

fn logits_ber(logits: &[f64], pairs: &[Pair], k: usize) -> f64 {
    let errors: usize = pairs
        .iter()
        .enumerate()
        .map(|(i, (_, m))| count_errors(predict_bits(&logits[i * k..(i + 1) * k]).bits(), m.bits()))
        .sum();
    errors as f64 / (pairs.len() * k) as f64
}

/// Bit error rate of `params` on `pairs`.
pub fn query_ber(params: &DecoderParams, pairs: &[Pair]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::InsufficientData("empty query set".into()));
    }
    let signals: Vec<_> = pairs.iter().map(|p| p.0.clone()).collect();
    let logits = decoder::forward_batch(params, &signals)?;
    Ok(logits_ber(logits.data(), pairs, params.k))
}

/// Query BER per episode. With `adapt` set, meta-learners first adapt on the
/// support set; ERM never adapts. ProtoNets always classifies against the
/// support prototypes.
pub fn evaluate(state: &MetaState, episodes: &[Episode], adapt_first: bool, cfg: &MetaConfig) -> Result<Evaluation> {
    let bers = episodes
        .par_iter()
        .map(|ep| {
            if state.algorithm == Algorithm::ProtoNets {
                let logits = protonet_multilabel(state, ep)?;
                return Ok(logits_ber(logits.data(), &ep.query, state.phi.k));
            }
            let steps = if adapt_first && state.algorithm.adapts() { cfg.inner_steps } else { 0 };
            let theta = adapt(state, &ep.support, steps, cfg.inner_lr)?;
            query_ber(&theta, &ep.query)
        })
        .collect::<Result<Vec<_>>>()?;
    summarize(bers)
}

/// Query BER of the Viterbi decoder per episode.
pub fn evaluate_viterbi(episodes: &[Episode]) -> Result<Evaluation> {
    let bers = episodes
        .par_iter()
        .map(|ep| {
            if ep.query.is_empty() {
                return Err(Error::InsufficientData("empty query set".into()));
            }
            let mut errors = 0;
            let mut bits = 0;
            for (y, m) in &ep.query {
                errors += count_errors(viterbi_decode(y)?.bits(), m.bits());
                bits += m.len();
            }
            Ok(errors as f64 / bits as f64)
        })
        .collect::<Result<Vec<_>>>()?;
    summarize(bers)
}
