//! Named train/test regimes.
//!
//! | name                        | train prior                          | test points                  |
//! |-----------------------------|--------------------------------------|------------------------------|
//! | `{family}-focused`          | narrow ranges around the test point  | family test point            |
//! | `{family}-expanded`         | wide ranges around the test point    | family test point            |
//! | `mixed`                     | equal mixture of all expanded ranges | all four family test points  |
//! | `mixed-{family}`            | same mixture                         | that family's test point     |
//! | `across-{train}-{test}`     | expanded range of `train`            | `test` family's test point   |
//! | `bursty-shift-{low,high}`   | disjoint SNR / burst SNR ranges      | burst SNR −22..−6 dB, step 2 |
//! | `domain-count-{100,50,20}`  | AWGN expanded, fixed example budget  | all four family test points  |
//! | `awgn-noiseless`            | AWGN at 200 dB                       | same point                   |
//!
//! Family test points: AWGN SNR 0; Bursty SNR 6 / burst SNR −14; Memory SNR 0,
//! α 0.5; Multipath SNR 0, β 0.5. The Bursty burst probability is not varied
//! by any regime and is fixed at [`BURST_PROB`].

use serde::{Deserialize, Serialize};

use super::{DatasetCounts, Interval, Prior, TaskDistributionSpec};
use crate::channel::{ChannelSpec, Family};
use crate::error::{Error, Result};

/// Burst probability used by every Bursty regime.
pub const BURST_PROB: f64 = 0.1;

/// Background SNR of the burst-SNR test grid in the shift regimes.
pub const SHIFT_TEST_SNR_DB: f64 = 6.0;

/// Number of channel setups in a meta-test dataset.
pub const META_TEST_SETUPS: usize = 50;

const DOMAIN_COUNTS: [usize; 3] = [100, 50, 20];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub train: TaskDistributionSpec,
    /// Equal-weight mixture of point priors, one per test point.
    pub test: TaskDistributionSpec,
    pub train_counts: DatasetCounts,
    pub test_counts: DatasetCounts,
}

impl Scenario {
    /// The distinct test channels, in registry order.
    pub fn test_points(&self) -> Vec<ChannelSpec> {
        self.test.atoms().expect("scenario test distributions are point masses")
    }

    /// Meta-test setups: the test points repeated cyclically to fill
    /// [`META_TEST_SETUPS`] slots.
    pub fn meta_test_setups(&self) -> Vec<ChannelSpec> {
        let points = self.test_points();
        (0..self.test_counts.setups).map(|i| points[i % points.len()]).collect()
    }
}

fn focused(family: Family) -> Prior {
    let i = Interval::new;
    match family {
        Family::Awgn => Prior::Awgn { snr_db: i(-0.5, 0.5) },
        Family::Bursty => Prior::Bursty {
            snr_db: i(5.5, 6.5),
            snr_b_db: i(-15.0, -13.0),
            burst_prob: Interval::point(BURST_PROB),
        },
        Family::Memory => Prior::Memory { snr_db: i(-0.5, 0.5), alpha: i(0.45, 0.55) },
        Family::Multipath => Prior::Multipath { snr_db: i(-0.5, 0.5), beta: i(0.45, 0.55) },
    }
}

fn expanded(family: Family) -> Prior {
    let i = Interval::new;
    match family {
        Family::Awgn => Prior::Awgn { snr_db: i(-5.0, 5.0) },
        Family::Bursty => Prior::Bursty {
            snr_db: i(1.0, 11.0),
            snr_b_db: i(-19.0, -9.0),
            burst_prob: Interval::point(BURST_PROB),
        },
        Family::Memory => Prior::Memory { snr_db: i(-5.0, 5.0), alpha: i(0.1, 0.9) },
        Family::Multipath => Prior::Multipath { snr_db: i(-5.0, 5.0), beta: i(0.1, 0.9) },
    }
}

fn test_point(family: Family) -> ChannelSpec {
    match family {
        Family::Awgn => ChannelSpec::awgn_db(0.0),
        Family::Bursty => ChannelSpec::bursty_db(6.0, -14.0, BURST_PROB),
        Family::Memory => ChannelSpec::memory_db(0.0, 0.5),
        Family::Multipath => ChannelSpec::multipath_db(0.0, 0.5),
    }
}

fn points(specs: impl IntoIterator<Item = ChannelSpec>) -> TaskDistributionSpec {
    TaskDistributionSpec::uniform_mixture(specs.into_iter().map(|s| Prior::at(&s)).collect())
}

fn all_test_points() -> TaskDistributionSpec {
    points(Family::ALL.map(test_point))
}

fn mixed_train() -> TaskDistributionSpec {
    TaskDistributionSpec::uniform_mixture(Family::ALL.map(expanded).to_vec())
}

fn shift_prior(low: bool) -> Prior {
    let (snr, snr_b) = if low { ((-2.5, 3.5), (-23.0, -17.0)) } else { ((8.5, 13.5), (-11.0, -5.0)) };
    Prior::Bursty {
        snr_db: Interval::new(snr.0, snr.1),
        snr_b_db: Interval::new(snr_b.0, snr_b.1),
        burst_prob: Interval::point(BURST_PROB),
    }
}

/// Burst-SNR test grid for the shift regimes: −22, −20, …, −6 dB.
pub fn shift_test_grid() -> Vec<ChannelSpec> {
    (0..9).map(|i| ChannelSpec::bursty_db(SHIFT_TEST_SNR_DB, -22.0 + 2.0 * i as f64, BURST_PROB)).collect()
}

/// Every registered scenario name.
pub fn scenario_names() -> Vec<String> {
    let mut names = Vec::new();
    for f in Family::ALL {
        names.push(format!("{}-focused", f.name()));
        names.push(format!("{}-expanded", f.name()));
    }
    names.push("mixed".into());
    for f in Family::ALL {
        names.push(format!("mixed-{}", f.name()));
    }
    for a in Family::ALL {
        for b in Family::ALL {
            names.push(format!("across-{}-{}", a.name(), b.name()));
        }
    }
    names.push("bursty-shift-low".into());
    names.push("bursty-shift-high".into());
    for n in DOMAIN_COUNTS {
        names.push(format!("domain-count-{n}"));
    }
    names.push("awgn-noiseless".into());
    names
}

/// Look up a scenario by name.
pub fn scenario(name: &str) -> Result<Scenario> {
    let unknown = || Error::UnknownScenario { name: name.to_string(), valid: scenario_names().join(", ") };
    let family = |s: &str| Family::parse(s).ok_or_else(unknown);
    let train_counts = DatasetCounts::META_TRAIN;
    let test_counts = DatasetCounts::META_TEST;
    let make = |train: TaskDistributionSpec, test: TaskDistributionSpec| Scenario {
        name: name.to_string(),
        train,
        test,
        train_counts,
        test_counts,
    };

    let parts: Vec<&str> = name.split('-').collect();
    let sc = match parts.as_slice() {
        [f, "focused"] => {
            let f = family(f)?;
            make(TaskDistributionSpec::single(focused(f)), points([test_point(f)]))
        }
        [f, "expanded"] => {
            let f = family(f)?;
            make(TaskDistributionSpec::single(expanded(f)), points([test_point(f)]))
        }
        ["mixed"] => make(mixed_train(), all_test_points()),
        ["mixed", f] => make(mixed_train(), points([test_point(family(f)?)])),
        ["across", a, b] => {
            make(TaskDistributionSpec::single(expanded(family(a)?)), points([test_point(family(b)?)]))
        }
        ["bursty", "shift", "low"] => make(TaskDistributionSpec::single(shift_prior(true)), points(shift_test_grid())),
        ["bursty", "shift", "high"] => make(TaskDistributionSpec::single(shift_prior(false)), points(shift_test_grid())),
        ["domain", "count", n] => {
            let setups: usize = n.parse().map_err(|_| unknown())?;
            if !DOMAIN_COUNTS.contains(&setups) {
                return Err(unknown());
            }
            // Total example budget and messages per setup held fixed; examples
            // per message absorb the change in setup count.
            let total = train_counts.setups * train_counts.examples;
            let mut sc = make(TaskDistributionSpec::single(expanded(Family::Awgn)), all_test_points());
            sc.train_counts = DatasetCounts { setups, messages: train_counts.messages, examples: total / setups };
            sc
        }
        ["awgn", "noiseless"] => {
            let p = ChannelSpec::awgn_db(200.0);
            make(points([p]), points([p]))
        }
        _ => return Err(unknown()),
    };
    Ok(sc)
}
