//! Task distributions over channels, benchmark datasets and episodes.
//!
//! A [`TaskDistributionSpec`] is a weighted mixture of per-family priors,
//! each parameter drawn uniformly from an interval expressed in benchmark
//! units (SNR in dB, burst SNR in dB, α, β).

mod dataset;
pub mod format;
mod scenario;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelSpec, Family};
use crate::error::{Error, Result};

pub use dataset::{
    build_dataset, build_dataset_with_setups, sample_episode, sample_episode_from_setup, BenchmarkDataset,
    DatasetCounts, Episode, Role,
};
pub use scenario::{scenario, scenario_names, Scenario, BURST_PROB, META_TEST_SETUPS, SHIFT_TEST_SNR_DB};

/// Closed interval `[lo, hi]`; serialized as a two-element array.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub const fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        self.lo + u * (self.hi - self.lo)
    }

    fn check(&self, name: &str) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi) {
            return Err(Error::InvalidDistribution(format!(
                "range for {name} must satisfy lo ≤ hi, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok(())
    }
}

impl From<[f64; 2]> for Interval {
    fn from([lo, hi]: [f64; 2]) -> Self {
        Self { lo, hi }
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

/// Uniform prior over one family's parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Prior {
    Awgn { snr_db: Interval },
    Bursty { snr_db: Interval, snr_b_db: Interval, burst_prob: Interval },
    Memory { snr_db: Interval, alpha: Interval },
    Multipath { snr_db: Interval, beta: Interval },
}

impl Prior {
    pub fn family(&self) -> Family {
        match self {
            Prior::Awgn { .. } => Family::Awgn,
            Prior::Bursty { .. } => Family::Bursty,
            Prior::Memory { .. } => Family::Memory,
            Prior::Multipath { .. } => Family::Multipath,
        }
    }

    /// Intervals in the same order as [`ChannelSpec::omega`].
    pub fn intervals(&self) -> Vec<Interval> {
        match *self {
            Prior::Awgn { snr_db } => vec![snr_db],
            Prior::Bursty { snr_db, snr_b_db, burst_prob } => vec![snr_db, snr_b_db, burst_prob],
            Prior::Memory { snr_db, alpha } => vec![snr_db, alpha],
            Prior::Multipath { snr_db, beta } => vec![snr_db, beta],
        }
    }

    pub fn is_point(&self) -> bool {
        self.intervals().iter().all(Interval::is_point)
    }

    /// A point prior concentrated on `spec`.
    pub fn at(spec: &ChannelSpec) -> Prior {
        let w = spec.omega();
        let p = Interval::point;
        match spec.family() {
            Family::Awgn => Prior::Awgn { snr_db: p(w[0]) },
            Family::Bursty => Prior::Bursty { snr_db: p(w[0]), snr_b_db: p(w[1]), burst_prob: p(w[2]) },
            Family::Memory => Prior::Memory { snr_db: p(w[0]), alpha: p(w[1]) },
            Family::Multipath => Prior::Multipath { snr_db: p(w[0]), beta: p(w[1]) },
        }
    }

    fn validate(&self) -> Result<()> {
        let check_domain = |i: &Interval, name: &str, ok: &dyn Fn(f64) -> bool| {
            i.check(name)?;
            if !ok(i.lo) || !ok(i.hi) {
                return Err(Error::InvalidDistribution(format!(
                    "range for {name} [{}, {}] leaves the parameter domain",
                    i.lo, i.hi
                )));
            }
            Ok(())
        };
        match self {
            Prior::Awgn { snr_db } => snr_db.check("snr_db"),
            Prior::Bursty { snr_db, snr_b_db, burst_prob } => {
                snr_db.check("snr_db")?;
                snr_b_db.check("snr_b_db")?;
                check_domain(burst_prob, "burst_prob", &|v| (0.0..=1.0).contains(&v))
            }
            Prior::Memory { snr_db, alpha } => {
                snr_db.check("snr_db")?;
                check_domain(alpha, "alpha", &|v| v.abs() < 1.0)
            }
            Prior::Multipath { snr_db, beta } => {
                snr_db.check("snr_db")?;
                check_domain(beta, "beta", &|v| v >= 0.0)
            }
        }
    }

    /// The channel at the lower end of every range.
    pub fn lower_corner(&self) -> ChannelSpec {
        match *self {
            Prior::Awgn { snr_db } => ChannelSpec::awgn_db(snr_db.lo),
            Prior::Bursty { snr_db, snr_b_db, burst_prob } => {
                ChannelSpec::bursty_db(snr_db.lo, snr_b_db.lo, burst_prob.lo)
            }
            Prior::Memory { snr_db, alpha } => ChannelSpec::memory_db(snr_db.lo, alpha.lo),
            Prior::Multipath { snr_db, beta } => ChannelSpec::multipath_db(snr_db.lo, beta.lo),
        }
    }

    /// Draw one channel. Consumes one uniform per parameter, in order.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelSpec {
        match self {
            Prior::Awgn { snr_db } => ChannelSpec::awgn_db(snr_db.sample(rng)),
            Prior::Bursty { snr_db, snr_b_db, burst_prob } => {
                let s = snr_db.sample(rng);
                let b = snr_b_db.sample(rng);
                let p = burst_prob.sample(rng);
                ChannelSpec::bursty_db(s, b, p)
            }
            Prior::Memory { snr_db, alpha } => {
                let s = snr_db.sample(rng);
                ChannelSpec::memory_db(s, alpha.sample(rng))
            }
            Prior::Multipath { snr_db, beta } => {
                let s = snr_db.sample(rng);
                ChannelSpec::multipath_db(s, beta.sample(rng))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub weight: f64,
    #[serde(flatten)]
    pub prior: Prior,
}

/// Mixture `p(ω) = Σ_k π_k p_k(ω)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskDistributionSpec {
    pub components: Vec<Component>,
}

/// Length of the mixture embedding of `ω`.
const MIXED_OMEGA_DIM: usize = 6;

impl TaskDistributionSpec {
    pub fn single(prior: Prior) -> Self {
        Self { components: vec![Component { weight: 1.0, prior }] }
    }

    /// Equal-weight mixture of the given priors.
    pub fn uniform_mixture(priors: Vec<Prior>) -> Self {
        let w = 1.0 / priors.len() as f64;
        Self { components: priors.into_iter().map(|prior| Component { weight: w, prior }).collect() }
    }

    /// Point prior on a single channel.
    pub fn point(spec: &ChannelSpec) -> Self {
        Self::single(Prior::at(spec))
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::InvalidDistribution("no mixture components".into()));
        }
        let mut total = 0.0;
        for c in &self.components {
            if !(c.weight >= 0.0 && c.weight.is_finite()) {
                return Err(Error::InvalidDistribution(format!("weight {} is negative", c.weight)));
            }
            total += c.weight;
            c.prior.validate()?;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!("weights sum to {total}, not 1")));
        }
        Ok(())
    }

    /// Draw `ω`: one uniform picks the component, then one uniform per
    /// parameter of that component.
    pub fn sample_task<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ChannelSpec> {
        self.validate()?;
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = self.components.len() - 1;
        for (i, c) in self.components.iter().enumerate() {
            acc += c.weight;
            if u < acc && c.weight > 0.0 {
                chosen = i;
                break;
            }
        }
        Ok(self.components[chosen].prior.sample(rng))
    }

    pub fn families(&self) -> Vec<Family> {
        let mut f: Vec<Family> = self.components.iter().map(|c| c.prior.family()).collect();
        f.sort();
        f.dedup();
        f
    }

    /// Distinct channels of a prior made only of point masses, in component order.
    pub fn atoms(&self) -> Option<Vec<ChannelSpec>> {
        let mut out: Vec<ChannelSpec> = Vec::new();
        for c in self.components.iter().filter(|c| c.weight > 0.0) {
            if !c.prior.is_point() {
                return None;
            }
            let spec = c.prior.lower_corner();
            if !out.contains(&spec) {
                out.push(spec);
            }
        }
        Some(out)
    }

    /// True when `p(ω)` is a single point mass.
    pub fn is_degenerate(&self) -> bool {
        matches!(self.atoms(), Some(a) if a.len() == 1)
    }

    /// Numeric embedding of a channel drawn from this distribution.
    ///
    /// Single-family distributions use [`ChannelSpec::omega`]. Mixtures over
    /// several families use a fixed layout
    /// `[family, snr, snr_b, burst_prob, memory_alpha, beta]` with absent
    /// parameters set to 0 and the family index scaled so the four families
    /// span the SNR range of the mixture.
    pub fn embed(&self, spec: &ChannelSpec) -> Vec<f64> {
        if self.families().len() <= 1 {
            return spec.omega();
        }
        let (lo, hi) = self
            .components
            .iter()
            .map(|c| c.prior.intervals()[0])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| (lo.min(i.lo), hi.max(i.hi)));
        let scale = ((hi - lo) / 3.0).max(1.0);
        let w = spec.omega();
        let mut v = vec![0.0; MIXED_OMEGA_DIM];
        v[0] = spec.family().index() as f64 * scale;
        v[1] = w[0];
        match spec.family() {
            Family::Awgn => {}
            Family::Bursty => {
                v[2] = w[1];
                v[3] = w[2];
            }
            Family::Memory => v[4] = w[1],
            Family::Multipath => v[5] = w[1],
        }
        v
    }
}

/// Free-function form of [`TaskDistributionSpec::sample_task`].
pub fn sample_task<R: Rng + ?Sized>(spec: &TaskDistributionSpec, rng: &mut R) -> Result<ChannelSpec> {
    spec.sample_task(rng)
}
