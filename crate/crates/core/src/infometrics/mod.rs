//! Diversity of a task distribution and shift between two task
//! distributions, estimated from simulated received signals.
//!
//! Both scores condition on the transmitted codeword: each of `M` random
//! codewords gets its own sample set and estimate, and the reported value is
//! the mean over codewords with the standard error across them.

mod knn;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{log_density, log_sum_exp, transmit, ChannelSpec};
use crate::codec::{conv_encode, Codeword, MessageBits, DEFAULT_K};
use crate::error::{Error, Result};
use crate::rng::{stream, StreamRng};
use crate::taskdist::TaskDistributionSpec;

pub use knn::{knn_kl, ksg_mi, Points, JITTER};

pub const DEFAULT_CODEWORDS: usize = 20;
pub const DEFAULT_SAMPLES: usize = 2000;
pub const DEFAULT_NEIGHBOURS: usize = 3;
/// ω draws used to marginalize densities in the Monte-Carlo oracles.
pub const DEFAULT_OMEGA_DRAWS: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Ksg,
    KnnKl,
    McOracle,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Ksg => "ksg",
            Estimator::KnnKl => "knn_kl",
            Estimator::McOracle => "mc_oracle",
        }
    }
}

/// A score in nats with its standard error across codewords.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricEstimate {
    pub value: f64,
    pub stderr: f64,
    pub estimator: Estimator,
    /// Samples per codeword.
    pub n: usize,
    /// Codewords.
    #[serde(rename = "M")]
    pub m: usize,
    /// Neighbours (0 for the oracles).
    pub k: usize,
    /// Jitter magnitude added before neighbour searches (0 for the oracles).
    pub jitter: f64,
    /// Per-codeword values the mean was taken over.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_codeword: Vec<f64>,
}

impl MetricEstimate {
    fn from_values(values: Vec<f64>, estimator: Estimator, n: usize, k: usize) -> Self {
        let m = values.len();
        let mean = values.iter().sum::<f64>() / m as f64;
        let stderr = if m > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m as f64 - 1.0) / m as f64).sqrt()
        } else {
            0.0
        };
        let jitter = if estimator == Estimator::McOracle { 0.0 } else { JITTER };
        Self { value: mean, stderr, estimator, n, m, k, jitter, per_codeword: values }
    }

    fn exact_zero(estimator: Estimator, n: usize, m: usize, k: usize) -> Self {
        Self { value: 0.0, stderr: 0.0, estimator, n, m, k, jitter: 0.0, per_codeword: Vec::new() }
    }
}

/// One JSON row of a metrics report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub scenario: String,
    pub metric: String,
    pub estimator: Estimator,
    pub value: f64,
    pub stderr: f64,
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub k: usize,
    pub seed: u64,
}

impl MetricRow {
    pub fn new(scenario: &str, metric: &str, est: &MetricEstimate, seed: u64) -> Self {
        Self {
            scenario: scenario.to_string(),
            metric: metric.to_string(),
            estimator: est.estimator,
            value: est.value,
            stderr: est.stderr,
            n: est.n,
            m: est.m,
            k: est.k,
            seed,
        }
    }
}

fn check_budget(m: usize, n: usize, k: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::InsufficientData("need at least one codeword".into()));
    }
    if n <= k {
        return Err(Error::InsufficientData(format!("need more samples than neighbours (n = {n}, k = {k})")));
    }
    Ok(())
}

/// Random codeword and its private stream for replicate `j`.
fn replicate(root: u64, j: usize) -> Result<(Codeword, StreamRng)> {
    let mut rng = stream(root, j as u64);
    let msg = MessageBits::from_index(rng.random_range(0..1u64 << DEFAULT_K), DEFAULT_K)?;
    Ok((conv_encode(&msg), rng))
}

/// `n` paired draws `ω ~ p(ω)`, `y ~ p(y | c, ω)`.
fn draw_pairs(spec: &TaskDistributionSpec, c: &Codeword, n: usize, rng: &mut StreamRng) -> Result<(Points, Points)> {
    let (mut w, mut y) = (Vec::new(), Vec::new());
    for _ in 0..n {
        let ch = spec.sample_task(rng)?;
        w.push(spec.embed(&ch));
        y.push(transmit(c, &ch, rng)?.into_inner());
    }
    Ok((Points::from_rows(&w)?, Points::from_rows(&y)?))
}

/// `D(T) = E_c[I(ω; y | c)]` by KSG, without any shortcut.
pub fn diversity_score_ksg<R: Rng + ?Sized>(
    spec: &TaskDistributionSpec,
    m: usize,
    n: usize,
    k: usize,
    rng: &mut R,
) -> Result<MetricEstimate> {
    spec.validate()?;
    check_budget(m, n, k)?;
    let root: u64 = rng.random();
    let values = (0..m)
        .into_par_iter()
        .map(|j| {
            let (c, mut r) = replicate(root, j)?;
            let (w, y) = draw_pairs(spec, &c, n, &mut r)?;
            ksg_mi(&w, &y, k)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricEstimate::from_values(values, Estimator::Ksg, n, k))
}

/// `D(T)`; a distribution with a single atom has exactly zero diversity.
pub fn diversity_score<R: Rng + ?Sized>(
    spec: &TaskDistributionSpec,
    m: usize,
    n: usize,
    k: usize,
    rng: &mut R,
) -> Result<MetricEstimate> {
    spec.validate()?;
    check_budget(m, n, k)?;
    if spec.is_degenerate() {
        return Ok(MetricEstimate::exact_zero(Estimator::Ksg, n, m, k));
    }
    diversity_score_ksg(spec, m, n, k, rng)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShiftMode {
    Symmetric,
    Asymmetric,
}

/// Per-codeword divergences `KL(p_a ‖ p_b)` and `KL(p_b ‖ p_a)` computed on
/// the same sample sets.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftComponents {
    pub kl_ab: Vec<f64>,
    pub kl_ba: Vec<f64>,
    pub n: usize,
    pub k: usize,
}

impl ShiftComponents {
    pub fn estimate(&self, mode: ShiftMode) -> MetricEstimate {
        let values = match mode {
            ShiftMode::Asymmetric => self.kl_ab.clone(),
            ShiftMode::Symmetric => self.kl_ab.iter().zip(&self.kl_ba).map(|(a, b)| a + b).collect(),
        };
        MetricEstimate::from_values(values, Estimator::KnnKl, self.n, self.k)
    }
}

/// k-NN divergences for paired per-codeword sample sets.
pub fn shift_from_samples(ya: &[Points], yb: &[Points], k: usize) -> Result<ShiftComponents> {
    if ya.len() != yb.len() || ya.is_empty() {
        return Err(Error::InsufficientData("need matching, non-empty sample sets per codeword".into()));
    }
    let pairs = ya
        .par_iter()
        .zip(yb)
        .map(|(a, b)| Ok((knn_kl(a, b, k)?, knn_kl(b, a, k)?)))
        .collect::<Result<Vec<_>>>()?;
    let (kl_ab, kl_ba) = pairs.into_iter().unzip();
    Ok(ShiftComponents { kl_ab, kl_ba, n: ya[0].len(), k })
}

/// Received-signal samples under each codeword, marginal over ω.
pub fn marginal_samples(
    spec_a: &TaskDistributionSpec,
    spec_b: &TaskDistributionSpec,
    m: usize,
    n: usize,
    root: u64,
) -> Result<(Vec<Points>, Vec<Points>)> {
    let sets = (0..m)
        .into_par_iter()
        .map(|j| {
            let (c, mut r) = replicate(root, j)?;
            let (_, a) = draw_pairs(spec_a, &c, n, &mut r)?;
            let (_, b) = draw_pairs(spec_b, &c, n, &mut r)?;
            Ok((a, b))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(sets.into_iter().unzip())
}

/// Both divergence directions per codeword.
pub fn shift_components<R: Rng + ?Sized>(
    spec_a: &TaskDistributionSpec,
    spec_b: &TaskDistributionSpec,
    m: usize,
    n: usize,
    k: usize,
    rng: &mut R,
) -> Result<ShiftComponents> {
    spec_a.validate()?;
    spec_b.validate()?;
    check_budget(m, n, k)?;
    let (ya, yb) = marginal_samples(spec_a, spec_b, m, n, rng.random())?;
    shift_from_samples(&ya, &yb, k)
}

/// `S(p_a, p_b)`: codeword-conditioned KL between the received-signal laws,
/// symmetrized or `p_a ‖ p_b` only.
pub fn shift_distance<R: Rng + ?Sized>(
    spec_a: &TaskDistributionSpec,
    spec_b: &TaskDistributionSpec,
    m: usize,
    n: usize,
    k: usize,
    mode: ShiftMode,
    rng: &mut R,
) -> Result<MetricEstimate> {
    Ok(shift_components(spec_a, spec_b, m, n, k, rng)?.estimate(mode))
}

/// `ln p(y | c)` marginalized over a fixed set of ω draws.
fn log_marginal(y: &crate::channel::ReceivedSignal, c: &Codeword, omegas: &[ChannelSpec]) -> Result<f64> {
    let terms = omegas.iter().map(|w| log_density(y, c, w)).collect::<Result<Vec<_>>>()?;
    Ok(log_sum_exp(&terms) - (omegas.len() as f64).ln())
}

fn omega_set(spec: &TaskDistributionSpec, draws: usize, rng: &mut StreamRng) -> Result<Vec<ChannelSpec>> {
    match spec.atoms() {
        Some(a) if a.len() == 1 => Ok(a),
        _ => (0..draws).map(|_| spec.sample_task(rng)).collect(),
    }
}

/// Monte-Carlo `E_{y ~ p_a}[ln p_a(y|c) − ln p_b(y|c)]` per codeword, from
/// the channel log-densities; symmetric mode adds the reverse direction.
#[allow(clippy::too_many_arguments)]
pub fn mc_kl_oracle<R: Rng + ?Sized>(
    spec_a: &TaskDistributionSpec,
    spec_b: &TaskDistributionSpec,
    mode: ShiftMode,
    m: usize,
    n: usize,
    omega_draws: usize,
    rng: &mut R,
) -> Result<MetricEstimate> {
    spec_a.validate()?;
    spec_b.validate()?;
    check_budget(m, n, 0)?;
    let root: u64 = rng.random();
    let one_way = |p: &TaskDistributionSpec, q: &TaskDistributionSpec, c: &Codeword, r: &mut StreamRng| -> Result<f64> {
        let (wp, wq) = (omega_set(p, omega_draws, r)?, omega_set(q, omega_draws, r)?);
        let mut acc = 0.0;
        for _ in 0..n {
            let y = transmit(c, &p.sample_task(r)?, r)?;
            acc += log_marginal(&y, c, &wp)? - log_marginal(&y, c, &wq)?;
        }
        Ok(acc / n as f64)
    };
    let values = (0..m)
        .into_par_iter()
        .map(|j| {
            let (c, mut r) = replicate(root, j)?;
            let ab = one_way(spec_a, spec_b, &c, &mut r)?;
            Ok(match mode {
                ShiftMode::Asymmetric => ab,
                ShiftMode::Symmetric => ab + one_way(spec_b, spec_a, &c, &mut r)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricEstimate::from_values(values, Estimator::McOracle, n, 0))
}

/// Monte-Carlo `E[ln p(y|c,ω) − ln p(y|c)]`; exactly 0 for a single atom.
pub fn mc_mi_oracle<R: Rng + ?Sized>(
    spec: &TaskDistributionSpec,
    m: usize,
    n: usize,
    omega_draws: usize,
    rng: &mut R,
) -> Result<MetricEstimate> {
    spec.validate()?;
    check_budget(m, n, 0)?;
    if spec.is_degenerate() {
        return Ok(MetricEstimate::exact_zero(Estimator::McOracle, n, m, 0));
    }
    let root: u64 = rng.random();
    let values = (0..m)
        .into_par_iter()
        .map(|j| {
            let (c, mut r) = replicate(root, j)?;
            let omegas = omega_set(spec, omega_draws, &mut r)?;
            let mut acc = 0.0;
            for _ in 0..n {
                let w = spec.sample_task(&mut r)?;
                let y = transmit(&c, &w, &mut r)?;
                acc += log_density(&y, &c, &w)? - log_marginal(&y, &c, &omegas)?;
            }
            Ok(acc / n as f64)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricEstimate::from_values(values, Estimator::McOracle, n, 0))
}
