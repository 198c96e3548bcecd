use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Meta-iterations used when the full schedule is scaled down to a desk run.
pub const DESK_ITERATIONS: u64 = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Erm,
    Fomaml,
    Reptile,
    #[serde(rename = "metasgd")]
    MetaSgd,
    Anil,
    #[serde(rename = "protonets")]
    ProtoNets,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] =
        [Algorithm::Erm, Algorithm::Fomaml, Algorithm::Reptile, Algorithm::MetaSgd, Algorithm::Anil, Algorithm::ProtoNets];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Erm => "erm",
            Algorithm::Fomaml => "fomaml",
            Algorithm::Reptile => "reptile",
            Algorithm::MetaSgd => "metasgd",
            Algorithm::Anil => "anil",
            Algorithm::ProtoNets => "protonets",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| Error::UnknownLearner {
            name: s.to_string(),
            valid: Self::ALL.iter().map(|a| a.name()).collect::<Vec<_>>().join(", "),
        })
    }

    /// Whether evaluation adapts on the support set first.
    pub fn adapts(self) -> bool {
        self != Algorithm::Erm
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeShape {
    pub n_way: usize,
    pub k_shot: usize,
    pub l_query: usize,
}

impl Default for EpisodeShape {
    fn default() -> Self {
        Self { n_way: 5, k_shot: 5, l_query: 15 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetaConfig {
    pub algorithm: Algorithm,
    /// Adam rate of the outer loop.
    pub outer_lr: f64,
    /// SGD rate of the inner loop (initial α for MetaSGD).
    pub inner_lr: f64,
    pub inner_steps: usize,
    /// Tasks per outer update.
    pub meta_batch: usize,
    pub iterations: u64,
    pub episode: EpisodeShape,
    /// Examples per ERM step.
    pub erm_batch: usize,
}

impl Default for MetaConfig {
    fn default() -> Self {
        let episode = EpisodeShape::default();
        Self {
            algorithm: Algorithm::Fomaml,
            outer_lr: 0.001,
            inner_lr: 0.1,
            inner_steps: 2,
            meta_batch: 10,
            iterations: 80_000,
            episode,
            erm_batch: episode.n_way * (episode.k_shot + episode.l_query),
        }
    }
}

impl MetaConfig {
    pub fn for_algorithm(algorithm: Algorithm) -> Self {
        Self { algorithm, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("{what} must be positive")));
        if !(self.outer_lr > 0.0 && self.outer_lr.is_finite()) {
            return bad("outer_lr");
        }
        if !(self.inner_lr > 0.0 && self.inner_lr.is_finite()) {
            return bad("inner_lr");
        }
        if self.meta_batch == 0 {
            return bad("meta_batch");
        }
        if self.iterations == 0 {
            return bad("iterations");
        }
        if self.erm_batch == 0 {
            return bad("erm_batch");
        }
        let e = self.episode;
        if e.n_way == 0 || e.k_shot == 0 || e.l_query == 0 {
            return bad("episode n_way, k_shot and l_query");
        }
        Ok(())
    }
}
