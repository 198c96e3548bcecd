//! Synthetic channel families and their exact densities.
//!
//! All four families add noise to a ±1 codeword `c` of length `2K`:
//!
//! | family    | model                                                        |
//! |-----------|--------------------------------------------------------------|
//! | AWGN      | `y = c + z`, `z ~ N(0, σ²I)`                                  |
//! | Bursty    | `y = c + z + D n`, `D_ii ~ Bern(α)`, `n ~ N(0, σ_b²I)`        |
//! | Memory    | `y = c + z`, `z_i = α z_{i-1} + √(1-α²) n_i`, stationary AR(1) |
//! | Multipath | `y = c + β c^(d) + z`, `d ~ Unif{1..K}` resampled per block   |
//!
//! Parameters are held in linear units (noise standard deviations). On the
//! wire a [`ChannelSpec`] is written in benchmark units: SNR and burst SNR in
//! dB, with `σ = 10^(-SNR/20)`.
//!
//! Draws per transmission are fixed: AWGN and Memory take `2K` normals,
//! Bursty takes `2K` normals, `2K` uniforms and `2K` normals (all drawn
//! whether or not a burst fires), Multipath takes one delay then `2K` normals.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::codec::Codeword;
use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// A noisy received block `y ∈ ℝ^{2K}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReceivedSignal(Vec<f64>);

impl ReceivedSignal {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("received signal"));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Channel family tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Awgn,
    Bursty,
    Memory,
    Multipath,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Awgn, Family::Bursty, Family::Memory, Family::Multipath];

    pub fn name(self) -> &'static str {
        match self {
            Family::Awgn => "awgn",
            Family::Bursty => "bursty",
            Family::Memory => "memory",
            Family::Multipath => "multipath",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn parse(s: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.name() == s)
    }
}

/// One concrete channel `ω`: a family plus its parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "ChannelRecord", try_from = "ChannelRecord")]
pub enum ChannelSpec {
    Awgn { sigma: f64 },
    Bursty { sigma: f64, burst_sigma: f64, burst_prob: f64 },
    Memory { sigma: f64, alpha: f64 },
    Multipath { sigma: f64, beta: f64 },
}

/// `σ = 10^(-SNR/20)`.
pub fn snr_to_sigma(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 20.0)
}

/// `SNR = -20 log10 σ`.
pub fn sigma_to_snr(sigma: f64) -> f64 {
    // 0 − x keeps σ = 1 at +0 dB
    0.0 - 20.0 * sigma.log10()
}

impl ChannelSpec {
    pub fn awgn_db(snr_db: f64) -> Self {
        ChannelSpec::Awgn { sigma: snr_to_sigma(snr_db) }
    }

    pub fn bursty_db(snr_db: f64, snr_b_db: f64, burst_prob: f64) -> Self {
        ChannelSpec::Bursty {
            sigma: snr_to_sigma(snr_db),
            burst_sigma: snr_to_sigma(snr_b_db),
            burst_prob,
        }
    }

    pub fn memory_db(snr_db: f64, alpha: f64) -> Self {
        ChannelSpec::Memory { sigma: snr_to_sigma(snr_db), alpha }
    }

    pub fn multipath_db(snr_db: f64, beta: f64) -> Self {
        ChannelSpec::Multipath { sigma: snr_to_sigma(snr_db), beta }
    }

    pub fn family(&self) -> Family {
        match self {
            ChannelSpec::Awgn { .. } => Family::Awgn,
            ChannelSpec::Bursty { .. } => Family::Bursty,
            ChannelSpec::Memory { .. } => Family::Memory,
            ChannelSpec::Multipath { .. } => Family::Multipath,
        }
    }

    pub fn sigma(&self) -> f64 {
        match *self {
            ChannelSpec::Awgn { sigma }
            | ChannelSpec::Bursty { sigma, .. }
            | ChannelSpec::Memory { sigma, .. }
            | ChannelSpec::Multipath { sigma, .. } => sigma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidChannel(msg));
        let sigma = self.sigma();
        if !(sigma > 0.0 && sigma.is_finite()) {
            return bad(format!("sigma must be positive and finite, got {sigma}"));
        }
        match *self {
            ChannelSpec::Awgn { .. } => Ok(()),
            ChannelSpec::Bursty { burst_sigma, burst_prob, .. } => {
                if !(burst_sigma > 0.0 && burst_sigma.is_finite()) {
                    return bad(format!("burst sigma must be positive, got {burst_sigma}"));
                }
                if !(0.0..=1.0).contains(&burst_prob) {
                    return bad(format!("burst probability must lie in [0,1], got {burst_prob}"));
                }
                Ok(())
            }
            ChannelSpec::Memory { alpha, .. } => {
                if !(alpha.abs() < 1.0) {
                    return bad(format!("AR coefficient must satisfy |α| < 1, got {alpha}"));
                }
                Ok(())
            }
            ChannelSpec::Multipath { beta, .. } => {
                if !(beta >= 0.0 && beta.is_finite()) {
                    return bad(format!("echo attenuation must be ≥ 0, got {beta}"));
                }
                Ok(())
            }
        }
    }

    /// Parameter vector in benchmark units, fixed order per family:
    /// AWGN `[snr]`, Bursty `[snr, snr_b, α]`, Memory `[snr, α]`,
    /// Multipath `[snr, β]`.
    pub fn omega(&self) -> Vec<f64> {
        let snr = sigma_to_snr(self.sigma());
        match *self {
            ChannelSpec::Awgn { .. } => vec![snr],
            ChannelSpec::Bursty { burst_sigma, burst_prob, .. } => {
                vec![snr, sigma_to_snr(burst_sigma), burst_prob]
            }
            ChannelSpec::Memory { alpha, .. } => vec![snr, alpha],
            ChannelSpec::Multipath { beta, .. } => vec![snr, beta],
        }
    }
}

/// Serialized form of a [`ChannelSpec`], in dB / unitless benchmark units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelRecord {
    pub family: Family,
    pub snr_db: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_b_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

impl From<ChannelSpec> for ChannelRecord {
    fn from(spec: ChannelSpec) -> Self {
        let snr_db = sigma_to_snr(spec.sigma());
        let mut rec = ChannelRecord { family: spec.family(), snr_db, snr_b_db: None, alpha: None, beta: None };
        match spec {
            ChannelSpec::Awgn { .. } => {}
            ChannelSpec::Bursty { burst_sigma, burst_prob, .. } => {
                rec.snr_b_db = Some(sigma_to_snr(burst_sigma));
                rec.alpha = Some(burst_prob);
            }
            ChannelSpec::Memory { alpha, .. } => rec.alpha = Some(alpha),
            ChannelSpec::Multipath { beta, .. } => rec.beta = Some(beta),
        }
        rec
    }
}

impl TryFrom<ChannelRecord> for ChannelSpec {
    type Error = Error;

    fn try_from(rec: ChannelRecord) -> Result<Self> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Error::InvalidChannel(format!("{} channel requires `{name}`", rec.family.name())))
        };
        let spec = match rec.family {
            Family::Awgn => ChannelSpec::awgn_db(rec.snr_db),
            Family::Bursty => {
                ChannelSpec::bursty_db(rec.snr_db, need(rec.snr_b_db, "snr_b_db")?, need(rec.alpha, "alpha")?)
            }
            Family::Memory => ChannelSpec::memory_db(rec.snr_db, need(rec.alpha, "alpha")?),
            Family::Multipath => ChannelSpec::multipath_db(rec.snr_db, need(rec.beta, "beta")?),
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// `y = c + β c^(d) + σ z` for a fixed delay `d ≥ 1` (symbol positions).
pub fn multipath_with_delay<R: Rng + ?Sized>(
    c: &Codeword,
    sigma: f64,
    beta: f64,
    delay: usize,
    rng: &mut R,
) -> ReceivedSignal {
    let cf = c.to_f64();
    let y = (0..cf.len())
        .map(|i| {
            let echo = if i >= delay { cf[i - delay] } else { 0.0 };
            cf[i] + beta * echo + sigma * normal(rng)
        })
        .collect();
    ReceivedSignal(y)
}

/// Pass a codeword through the channel.
pub fn transmit<R: Rng + ?Sized>(c: &Codeword, spec: &ChannelSpec, rng: &mut R) -> Result<ReceivedSignal> {
    spec.validate()?;
    let cf = c.to_f64();
    let n = cf.len();
    let y = match *spec {
        ChannelSpec::Awgn { sigma } => cf.iter().map(|&ci| ci + sigma * normal(rng)).collect(),
        ChannelSpec::Bursty { sigma, burst_sigma, burst_prob } => {
            let z: Vec<f64> = (0..n).map(|_| normal(rng)).collect();
            let hit: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < burst_prob).collect();
            let b: Vec<f64> = (0..n).map(|_| normal(rng)).collect();
            (0..n)
                .map(|i| cf[i] + sigma * z[i] + if hit[i] { burst_sigma * b[i] } else { 0.0 })
                .collect()
        }
        ChannelSpec::Memory { sigma, alpha } => {
            let innov = (1.0 - alpha * alpha).sqrt();
            let mut z = sigma * normal(rng);
            let mut y = Vec::with_capacity(n);
            y.push(cf[0] + z);
            for &ci in &cf[1..] {
                z = alpha * z + innov * sigma * normal(rng);
                y.push(ci + z);
            }
            y
        }
        ChannelSpec::Multipath { sigma, beta } => {
            let delay = rng.random_range(1..=c.message_len());
            return Ok(multipath_with_delay(c, sigma, beta, delay, rng));
        }
    };
    Ok(ReceivedSignal(y))
}

fn gauss_logpdf(x: f64, var: f64) -> f64 {
    -0.5 * (LN_2PI + var.ln() + x * x / var)
}

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Exact `ln p(y | c, ω)` in nats. Multipath marginalizes the delay.
pub fn log_density(y: &ReceivedSignal, c: &Codeword, spec: &ChannelSpec) -> Result<f64> {
    spec.validate()?;
    if y.len() != c.len() {
        return Err(Error::LengthMismatch { expected: c.len(), actual: y.len() });
    }
    let cf = c.to_f64();
    let yv = y.values();
    let n = yv.len();
    let lp = match *spec {
        ChannelSpec::Awgn { sigma } => {
            let var = sigma * sigma;
            yv.iter().zip(&cf).map(|(a, b)| gauss_logpdf(a - b, var)).sum()
        }
        ChannelSpec::Bursty { sigma, burst_sigma, burst_prob } => {
            let var = sigma * sigma;
            let var_b = var + burst_sigma * burst_sigma;
            yv.iter()
                .zip(&cf)
                .map(|(a, b)| {
                    let r = a - b;
                    let quiet = (1.0 - burst_prob).ln() + gauss_logpdf(r, var);
                    let burst = burst_prob.ln() + gauss_logpdf(r, var_b);
                    log_sum_exp(&[quiet, burst])
                })
                .sum()
        }
        ChannelSpec::Memory { sigma, alpha } => {
            // Stationary AR(1): z_0 ~ N(0,σ²), z_i | z_{i-1} ~ N(α z_{i-1}, σ²(1-α²)).
            let var = sigma * sigma;
            let cond_var = var * (1.0 - alpha * alpha);
            let z: Vec<f64> = yv.iter().zip(&cf).map(|(a, b)| a - b).collect();
            let mut lp = gauss_logpdf(z[0], var);
            for i in 1..n {
                lp += gauss_logpdf(z[i] - alpha * z[i - 1], cond_var);
            }
            lp
        }
        ChannelSpec::Multipath { sigma, beta } => {
            let var = sigma * sigma;
            let k = c.message_len();
            let terms: Vec<f64> = (1..=k)
                .map(|d| {
                    (0..n)
                        .map(|i| {
                            let echo = if i >= d { cf[i - d] } else { 0.0 };
                            gauss_logpdf(yv[i] - cf[i] - beta * echo, var)
                        })
                        .sum::<f64>()
                })
                .collect();
            log_sum_exp(&terms) - (k as f64).ln()
        }
    };
    Ok(lp)
}

/// Per-coordinate sample mean and variance of the received signal.
#[derive(Clone, Debug)]
pub struct Moments {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

/// Sample moments of `n` independent transmissions of `c` (unbiased variance).
pub fn empirical_moments<R: Rng + ?Sized>(
    spec: &ChannelSpec,
    c: &Codeword,
    n: usize,
    rng: &mut R,
) -> Result<Moments> {
    if n < 2 {
        return Err(Error::InvalidChannel("empirical moments need at least 2 samples".into()));
    }
    let d = c.len();
    let mut mean = vec![0.0; d];
    let mut m2 = vec![0.0; d];
    for t in 0..n {
        let y = transmit(c, spec, rng)?;
        for (i, &v) in y.values().iter().enumerate() {
            // Welford
            let delta = v - mean[i];
            mean[i] += delta / (t + 1) as f64;
            m2[i] += delta * (v - mean[i]);
        }
    }
    let variance = m2.iter().map(|s| s / (n - 1) as f64).collect();
    Ok(Moments { mean, variance })
}

/// Differential entropy of AWGN noise over `dim` coordinates, in nats.
pub fn awgn_entropy(sigma: f64, dim: usize) -> f64 {
    0.5 * dim as f64 * (2.0 * PI * std::f64::consts::E * sigma * sigma).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{conv_encode, MessageBits};
    use crate::rng::stream;

    fn codeword(k: usize, seed: u64) -> Codeword {
        let mut r = stream(seed, 99);
        let bits = (0..k).map(|_| r.random_range(0..2u8)).collect();
        conv_encode(&MessageBits::new(bits).unwrap())
    }

    #[test]
    fn snr_conversion_examples() {
        assert_eq!(snr_to_sigma(0.0), 1.0);
        assert!((snr_to_sigma(20.0) - 0.1).abs() < 1e-15);
        assert!((snr_to_sigma(-6.0) - 1.9953).abs() < 1e-4);
        assert!((sigma_to_snr(snr_to_sigma(7.3)) - 7.3).abs() < 1e-12);
    }

    #[test]
    fn awgn_vanishing_noise_is_identity() {
        let c = codeword(10, 1);
        let y = transmit(&c, &ChannelSpec::Awgn { sigma: 1e-12 }, &mut stream(1, 0)).unwrap();
        let max = y.values().iter().zip(c.to_f64()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(max < 1e-9);
    }

    #[test]
    fn multipath_forced_delay_example() {
        let c = Codeword::new(vec![1, -1, 1, -1]).unwrap();
        let y = multipath_with_delay(&c, 1e-15, 0.5, 1, &mut stream(0, 0));
        let expected = [1.0, -0.5, 0.5, -0.5];
        for (a, b) in y.values().iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        let c = codeword(4, 2);
        let mut r = stream(0, 0);
        assert!(transmit(&c, &ChannelSpec::Awgn { sigma: 0.0 }, &mut r).is_err());
        assert!(transmit(&c, &ChannelSpec::Memory { sigma: 1.0, alpha: 1.0 }, &mut r).is_err());
        assert!(transmit(&c, &ChannelSpec::Bursty { sigma: 1.0, burst_sigma: 1.0, burst_prob: 1.5 }, &mut r).is_err());
        assert!(transmit(&c, &ChannelSpec::Multipath { sigma: 1.0, beta: -0.1 }, &mut r).is_err());
    }

    #[test]
    fn awgn_density_at_mean() {
        let c = codeword(10, 3);
        let y = ReceivedSignal::new(c.to_f64()).unwrap();
        let lp = log_density(&y, &c, &ChannelSpec::Awgn { sigma: 1.0 }).unwrap();
        assert!((lp - (-10.0 * (2.0 * PI).ln())).abs() < 1e-4);
        assert!((lp + 18.3788).abs() < 1e-4);
    }

    #[test]
    fn degenerate_mixtures_match_awgn_density() {
        let c = codeword(10, 4);
        let y = transmit(&c, &ChannelSpec::Awgn { sigma: 0.8 }, &mut stream(4, 0)).unwrap();
        let awgn = log_density(&y, &c, &ChannelSpec::Awgn { sigma: 0.8 }).unwrap();
        let bursty = log_density(&y, &c, &ChannelSpec::Bursty { sigma: 0.8, burst_sigma: 3.0, burst_prob: 0.0 }).unwrap();
        let memory = log_density(&y, &c, &ChannelSpec::Memory { sigma: 0.8, alpha: 0.0 }).unwrap();
        assert!((awgn - bursty).abs() < 1e-12);
        assert!((awgn - memory).abs() < 1e-12);
    }

    #[test]
    fn density_rejects_non_finite_and_mismatch() {
        let c = codeword(2, 5);
        assert!(ReceivedSignal::new(vec![f64::NAN, 0.0, 0.0, 0.0]).is_err());
        let y = ReceivedSignal::new(vec![0.0; 6]).unwrap();
        assert!(log_density(&y, &c, &ChannelSpec::Awgn { sigma: 1.0 }).is_err());
    }

    fn assert_2d_density_normalized(spec: ChannelSpec) {
        // K = 1: two coordinates, trapezoid rule on a wide grid.
        let c = Codeword::new(vec![1, -1]).unwrap();
        let (lo, hi, steps) = (-14.0, 14.0, 700);
        let h = (hi - lo) / steps as f64;
        let mut total = 0.0;
        for i in 0..=steps {
            for j in 0..=steps {
                let y = ReceivedSignal::new(vec![lo + i as f64 * h, lo + j as f64 * h]).unwrap();
                let w = if i == 0 || i == steps { 0.5 } else { 1.0 } * if j == 0 || j == steps { 0.5 } else { 1.0 };
                total += w * log_density(&y, &c, &spec).unwrap().exp();
            }
        }
        total *= h * h;
        assert!((total - 1.0).abs() < 1e-6, "{spec:?} integrates to {total}");
    }

    #[test]
    fn densities_integrate_to_one() {
        assert_2d_density_normalized(ChannelSpec::Awgn { sigma: 0.7 });
        assert_2d_density_normalized(ChannelSpec::Bursty { sigma: 0.7, burst_sigma: 2.0, burst_prob: 0.3 });
        assert_2d_density_normalized(ChannelSpec::Memory { sigma: 0.9, alpha: 0.6 });
        assert_2d_density_normalized(ChannelSpec::Multipath { sigma: 0.8, beta: 0.5 });
    }

    #[test]
    fn awgn_cross_entropy_matches_closed_form() {
        let c = codeword(10, 6);
        let spec = ChannelSpec::Awgn { sigma: 0.6 };
        let mut r = stream(6, 0);
        let n = 20_000;
        let vals: Vec<f64> = (0..n)
            .map(|_| log_density(&transmit(&c, &spec, &mut r).unwrap(), &c, &spec).unwrap())
            .collect();
        let mean = vals.iter().sum::<f64>() / n as f64;
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        let expected = -awgn_entropy(0.6, 20);
        assert!((mean - expected).abs() < 4.0 * sd / (n as f64).sqrt(), "{mean} vs {expected}");
    }

    #[test]
    fn awgn_moments() {
        let c = codeword(10, 7);
        let m = empirical_moments(&ChannelSpec::Awgn { sigma: 1.0 }, &c, 100_000, &mut stream(7, 0)).unwrap();
        for (mu, ci) in m.mean.iter().zip(c.to_f64()) {
            assert!((mu - ci).abs() < 0.02);
        }
        for v in &m.variance {
            assert!((v - 1.0).abs() < 0.03);
        }
    }

    #[test]
    fn bursty_moments() {
        let c = codeword(10, 8);
        let spec = ChannelSpec::Bursty { sigma: 1.0, burst_sigma: 3.0, burst_prob: 0.5 };
        let m = empirical_moments(&spec, &c, 100_000, &mut stream(8, 0)).unwrap();
        for v in &m.variance {
            assert!((v - 5.5).abs() < 0.2, "variance {v}");
        }
    }

    #[test]
    fn memory_is_stationary_with_lag_one_correlation() {
        let c = codeword(10, 9);
        for alpha in [-0.6, 0.3, 0.8] {
            let spec = ChannelSpec::Memory { sigma: 1.0, alpha };
            let mut r = stream(9, 0);
            let m = empirical_moments(&spec, &c, 100_000, &mut r).unwrap();
            for v in &m.variance {
                assert!((v - 1.0).abs() < 0.03, "alpha {alpha}: variance {v}");
            }
            let lag1 = lag_one_autocorrelation(&spec, &c, 100_000, &mut r);
            assert!((lag1 - alpha).abs() < 0.02, "alpha {alpha}: lag-1 {lag1}");
        }
    }

    pub(crate) fn lag_one_autocorrelation<R: Rng>(spec: &ChannelSpec, c: &Codeword, n: usize, rng: &mut R) -> f64 {
        let cf = c.to_f64();
        let (mut num, mut den) = (0.0, 0.0);
        for _ in 0..n {
            let y = transmit(c, spec, rng).unwrap();
            let z: Vec<f64> = y.values().iter().zip(&cf).map(|(a, b)| a - b).collect();
            num += z.windows(2).map(|w| w[0] * w[1]).sum::<f64>();
            den += z[..z.len() - 1].iter().map(|v| v * v).sum::<f64>();
        }
        num / den
    }

    #[test]
    fn memory_with_zero_alpha_matches_awgn_statistics() {
        let c = codeword(10, 10);
        let a = empirical_moments(&ChannelSpec::Awgn { sigma: 0.9 }, &c, 50_000, &mut stream(10, 0)).unwrap();
        let m = empirical_moments(&ChannelSpec::Memory { sigma: 0.9, alpha: 0.0 }, &c, 50_000, &mut stream(10, 1)).unwrap();
        // se of a mean is 0.9/sqrt(5e4) ≈ 0.004; of a variance ≈ 0.81*sqrt(2/5e4) ≈ 0.005
        for i in 0..c.len() {
            assert!((a.mean[i] - m.mean[i]).abs() < 0.025);
            assert!((a.variance[i] - m.variance[i]).abs() < 0.03);
        }
    }

    #[test]
    fn seeded_transmission_is_reproducible() {
        let c = codeword(10, 11);
        for spec in [
            ChannelSpec::Awgn { sigma: 0.5 },
            ChannelSpec::Bursty { sigma: 0.5, burst_sigma: 2.0, burst_prob: 0.2 },
            ChannelSpec::Memory { sigma: 0.5, alpha: 0.4 },
            ChannelSpec::Multipath { sigma: 0.5, beta: 0.3 },
        ] {
            let a = transmit(&c, &spec, &mut stream(3, 3)).unwrap();
            let b = transmit(&c, &spec, &mut stream(3, 3)).unwrap();
            let bytes = |s: &ReceivedSignal| s.values().iter().flat_map(|v| v.to_le_bytes()).collect::<Vec<_>>();
            assert_eq!(bytes(&a), bytes(&b));
        }
    }

    #[test]
    fn record_round_trip_in_benchmark_units() {
        let spec = ChannelSpec::bursty_db(6.0, -14.0, 0.1);
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.contains("\"family\":\"bursty\""));
        let back: ChannelSpec = serde_json::from_str(&json).unwrap();
        let (a, b) = (spec.omega(), back.omega());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9);
        }
        assert!(serde_json::from_str::<ChannelSpec>(r#"{"family":"memory","snr_db":0.0}"#).is_err());
    }
}
