use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::TaskDistributionSpec;
use crate::channel::{transmit, ChannelSpec, ReceivedSignal};
use crate::codec::{conv_encode, MessageBits, DEFAULT_K};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    #[serde(rename = "meta-train")]
    MetaTrain,
    #[serde(rename = "meta-test")]
    MetaTest,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::MetaTrain => "meta-train",
            Role::MetaTest => "meta-test",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetCounts {
    pub setups: usize,
    pub messages: usize,
    pub examples: usize,
}

impl DatasetCounts {
    pub const META_TRAIN: DatasetCounts = DatasetCounts { setups: 100, messages: 1000, examples: 20 };
    pub const META_TEST: DatasetCounts = DatasetCounts { setups: 50, messages: 100, examples: 50 };

    pub fn total_examples(&self) -> usize {
        self.setups * self.messages * self.examples
    }
}

/// Received signals for every (setup, message, example), stored as `f32`
/// in `[setup][message][example][symbol]` order.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkDataset {
    pub role: Role,
    pub k: usize,
    pub seed: u64,
    pub counts: DatasetCounts,
    pub setups: Vec<ChannelSpec>,
    pub(crate) messages: Vec<MessageBits>,
    pub(crate) signals: Vec<f32>,
}

impl BenchmarkDataset {
    pub fn symbols_per_example(&self) -> usize {
        2 * self.k
    }

    pub fn message(&self, setup: usize, msg: usize) -> &MessageBits {
        &self.messages[setup * self.counts.messages + msg]
    }

    pub fn messages_of(&self, setup: usize) -> &[MessageBits] {
        let m = self.counts.messages;
        &self.messages[setup * m..(setup + 1) * m]
    }

    pub fn signal_raw(&self, setup: usize, msg: usize, example: usize) -> &[f32] {
        let c = self.counts;
        let n = self.symbols_per_example();
        let start = ((setup * c.messages + msg) * c.examples + example) * n;
        &self.signals[start..start + n]
    }

    pub fn signal(&self, setup: usize, msg: usize, example: usize) -> ReceivedSignal {
        let v = self.signal_raw(setup, msg, example).iter().map(|&x| f64::from(x)).collect();
        ReceivedSignal::new(v).expect("stored signals are finite")
    }

    pub fn raw_signals(&self) -> &[f32] {
        &self.signals
    }

    pub fn raw_messages(&self) -> &[MessageBits] {
        &self.messages
    }

    /// Reassemble from parts; used by the file reader.
    pub fn from_parts(
        role: Role,
        k: usize,
        seed: u64,
        counts: DatasetCounts,
        setups: Vec<ChannelSpec>,
        messages: Vec<MessageBits>,
        signals: Vec<f32>,
    ) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidDataset(m));
        if setups.len() != counts.setups {
            return bad(format!("{} setups declared, {} present", counts.setups, setups.len()));
        }
        if messages.len() != counts.setups * counts.messages || messages.iter().any(|m| m.len() != k) {
            return bad("message table inconsistent with counts".into());
        }
        if signals.len() != counts.total_examples() * 2 * k {
            return bad("signal payload inconsistent with counts".into());
        }
        Ok(Self { role, k, seed, counts, setups, messages, signals })
    }
}

fn check_counts(counts: DatasetCounts, k: usize) -> Result<()> {
    if counts.setups == 0 || counts.messages == 0 || counts.examples == 0 {
        return Err(Error::InvalidDataset(format!("counts must be ≥ 1, got {counts:?}")));
    }
    if k == 0 {
        return Err(Error::InvalidDataset("message length must be ≥ 1".into()));
    }
    if k < 63 && counts.messages as u64 > 1u64 << k {
        return Err(Error::InvalidDataset(format!(
            "{} distinct messages requested but only 2^{k} exist",
            counts.messages
        )));
    }
    Ok(())
}

/// Sample `counts.setups` channels from `spec` and generate their data.
///
/// Setup `i` draws its channel from stream 0 of `seed` (sequentially), then
/// generates messages and signals from stream `i + 1`, so setups can be
/// built in parallel with identical output.
pub fn build_dataset(
    spec: &TaskDistributionSpec,
    counts: DatasetCounts,
    role: Role,
    seed: u64,
) -> Result<BenchmarkDataset> {
    check_counts(counts, DEFAULT_K)?;
    let mut r = rng::stream(seed, 0);
    let setups = (0..counts.setups).map(|_| spec.sample_task(&mut r)).collect::<Result<Vec<_>>>()?;
    build_dataset_with_setups(setups, counts, DEFAULT_K, role, seed)
}

/// Generate data for explicitly listed channels (e.g. a meta-test grid).
pub fn build_dataset_with_setups(
    setups: Vec<ChannelSpec>,
    counts: DatasetCounts,
    k: usize,
    role: Role,
    seed: u64,
) -> Result<BenchmarkDataset> {
    check_counts(counts, k)?;
    if setups.len() != counts.setups {
        return Err(Error::InvalidDataset(format!(
            "{} setups supplied for a count of {}",
            setups.len(),
            counts.setups
        )));
    }
    for s in &setups {
        s.validate()?;
    }
    let per_setup: Vec<(Vec<MessageBits>, Vec<f32>)> = setups
        .par_iter()
        .enumerate()
        .map(|(i, spec)| generate_setup(spec, counts, k, rng::stream(seed, i as u64 + 1)))
        .collect::<Result<_>>()?;

    let mut messages = Vec::with_capacity(counts.setups * counts.messages);
    let mut signals = Vec::with_capacity(counts.total_examples() * 2 * k);
    for (m, s) in per_setup {
        messages.extend(m);
        signals.extend(s);
    }
    Ok(BenchmarkDataset { role, k, seed, counts, setups, messages, signals })
}

fn generate_setup(
    spec: &ChannelSpec,
    counts: DatasetCounts,
    k: usize,
    mut r: rng::StreamRng,
) -> Result<(Vec<MessageBits>, Vec<f32>)> {
    let messages: Vec<MessageBits> = if k <= 24 {
        index::sample(&mut r, 1usize << k, counts.messages)
            .into_iter()
            .map(|idx| MessageBits::from_index(idx as u64, k))
            .collect::<Result<_>>()?
    } else {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::with_capacity(counts.messages);
        while out.len() < counts.messages {
            let bits: Vec<u8> = (0..k).map(|_| r.random_range(0..2u8)).collect();
            let m = MessageBits::new(bits)?;
            if seen.insert(m.clone()) {
                out.push(m);
            }
        }
        out
    };
    let mut signals = Vec::with_capacity(counts.messages * counts.examples * 2 * k);
    for m in &messages {
        let c = conv_encode(m);
        for _ in 0..counts.examples {
            let y = transmit(&c, spec, &mut r)?;
            signals.extend(y.values().iter().map(|&v| v as f32));
        }
    }
    Ok((messages, signals))
}

/// An N-way support/query split drawn from one setup.
#[derive(Clone, Debug)]
pub struct Episode {
    pub setup: usize,
    pub channel: ChannelSpec,
    pub support: Vec<(ReceivedSignal, MessageBits)>,
    pub query: Vec<(ReceivedSignal, MessageBits)>,
    /// `(message, example)` indices within the setup, parallel to `support`.
    pub support_index: Vec<(usize, usize)>,
    /// `(message, example)` indices within the setup, parallel to `query`.
    pub query_index: Vec<(usize, usize)>,
}

impl Episode {
    /// Support and query together (Reptile's inner data).
    pub fn all_pairs(&self) -> Vec<(ReceivedSignal, MessageBits)> {
        self.support.iter().chain(&self.query).cloned().collect()
    }
}

/// Pick a setup uniformly, then draw an episode from it.
pub fn sample_episode<R: Rng + ?Sized>(
    ds: &BenchmarkDataset,
    n_way: usize,
    k_shot: usize,
    l_query: usize,
    rng: &mut R,
) -> Result<Episode> {
    let setup = rng.random_range(0..ds.counts.setups);
    sample_episode_from_setup(ds, setup, n_way, k_shot, l_query, rng)
}

/// `n_way` distinct messages from `setup`; for each, `k_shot + l_query`
/// distinct examples, the first `k_shot` going to the support set.
pub fn sample_episode_from_setup<R: Rng + ?Sized>(
    ds: &BenchmarkDataset,
    setup: usize,
    n_way: usize,
    k_shot: usize,
    l_query: usize,
    rng: &mut R,
) -> Result<Episode> {
    let c = ds.counts;
    if setup >= c.setups {
        return Err(Error::InsufficientData(format!("setup {setup} out of range ({} setups)", c.setups)));
    }
    if n_way == 0 || k_shot + l_query == 0 {
        return Err(Error::InsufficientData("episode must contain at least one example".into()));
    }
    if n_way > c.messages {
        return Err(Error::InsufficientData(format!("{n_way}-way episode but only {} messages", c.messages)));
    }
    if k_shot + l_query > c.examples {
        return Err(Error::InsufficientData(format!(
            "{k_shot} support + {l_query} query examples requested but only {} per message",
            c.examples
        )));
    }
    let mut ep = Episode {
        setup,
        channel: ds.setups[setup],
        support: Vec::with_capacity(n_way * k_shot),
        query: Vec::with_capacity(n_way * l_query),
        support_index: Vec::with_capacity(n_way * k_shot),
        query_index: Vec::with_capacity(n_way * l_query),
    };
    for msg in index::sample(rng, c.messages, n_way) {
        let bits = ds.message(setup, msg);
        let picks = index::sample(rng, c.examples, k_shot + l_query).into_vec();
        for (j, &ex) in picks.iter().enumerate() {
            let pair = (ds.signal(setup, msg, ex), bits.clone());
            if j < k_shot {
                ep.support.push(pair);
                ep.support_index.push((msg, ex));
            } else {
                ep.query.push(pair);
                ep.query_index.push((msg, ex));
            }
        }
    }
    Ok(ep)
}
