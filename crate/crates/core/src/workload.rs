//! Operation shapes: how many memory hops and IOs each key-value operation
//! performs, and how those distributions fold into per-IO model parameters.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::params::OperationModelParams;

/// Distribution of memory hops (dependent accesses) per operation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HopDistribution {
    Fixed { hops: u32 },
    /// Uniform over `lo..=hi`.
    UniformRange { lo: u32, hi: u32 },
    /// Geometric on `1, 2, ...` with the given mean, i.e. a search that stops
    /// after each hop with probability `1 / mean`.
    Geometric { mean: f64 },
}

impl HopDistribution {
    pub fn validate(&self) -> Result<()> {
        match *self {
            HopDistribution::Fixed { .. } => Ok(()),
            HopDistribution::UniformRange { lo, hi } if lo > hi => {
                Err(invalid("hops", format!("empty range {lo}..={hi}")))
            }
            HopDistribution::UniformRange { .. } => Ok(()),
            HopDistribution::Geometric { mean } if !(mean >= 1.0 && mean.is_finite()) => {
                Err(invalid("hops", format!("geometric mean must be >= 1, got {mean}")))
            }
            HopDistribution::Geometric { .. } => Ok(()),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            HopDistribution::Fixed { hops } => f64::from(hops),
            HopDistribution::UniformRange { lo, hi } => (f64::from(lo) + f64::from(hi)) / 2.0,
            HopDistribution::Geometric { mean } => mean,
        }
    }

    pub fn min(&self) -> u32 {
        match *self {
            HopDistribution::Fixed { hops } => hops,
            HopDistribution::UniformRange { lo, .. } => lo,
            HopDistribution::Geometric { .. } => 1,
        }
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self, HopDistribution::Fixed { .. })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        match *self {
            HopDistribution::Fixed { hops } => hops,
            HopDistribution::UniformRange { lo, hi } => rng.gen_range(lo..=hi),
            HopDistribution::Geometric { mean } => {
                if mean <= 1.0 {
                    return 1;
                }
                let stop = 1.0 / mean;
                // Inverse CDF; 1 - u lies in (0, 1].
                let u: f64 = 1.0 - rng.gen::<f64>();
                let extra = (u.ln() / (1.0 - stop).ln()).floor();
                1 + extra.min(f64::from(u32::MAX - 1)) as u32
            }
        }
    }
}

/// Distribution of IOs per operation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IoCountModel {
    /// `ios` IOs on average; a fractional part is realised as one extra IO
    /// with that probability.
    FixedIos { ios: f64 },
    /// No IO with probability `hit`, otherwise one.
    HitRatio { hit: f64 },
    /// No IO on a first-tier hit; one IO on a second-tier hit; `miss_ios` IOs
    /// when both tiers miss.
    TwoTier {
        tier1_hit: f64,
        tier2_hit: f64,
        miss_ios: u32,
    },
}

impl IoCountModel {
    pub fn validate(&self) -> Result<()> {
        let prob = |name, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(invalid(name, format!("must lie in [0, 1], got {v}")))
            }
        };
        match *self {
            IoCountModel::FixedIos { ios } if !(ios >= 0.0 && ios.is_finite()) => {
                Err(invalid("ios", format!("must be >= 0, got {ios}")))
            }
            IoCountModel::FixedIos { .. } => Ok(()),
            IoCountModel::HitRatio { hit } => prob("hit", hit),
            IoCountModel::TwoTier {
                tier1_hit,
                tier2_hit,
                ..
            } => {
                prob("tier1_hit", tier1_hit)?;
                prob("tier2_hit", tier2_hit)
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            IoCountModel::FixedIos { ios } => ios,
            IoCountModel::HitRatio { hit } => 1.0 - hit,
            IoCountModel::TwoTier {
                tier1_hit,
                tier2_hit,
                miss_ios,
            } => (1.0 - tier1_hit) * (tier2_hit + (1.0 - tier2_hit) * f64::from(miss_ios)),
        }
    }

    /// Whether an operation may issue no IO at all.
    pub fn may_be_zero(&self) -> bool {
        match *self {
            IoCountModel::FixedIos { ios } => ios < 1.0,
            IoCountModel::HitRatio { hit } => hit > 0.0,
            IoCountModel::TwoTier {
                tier1_hit,
                miss_ios,
                tier2_hit,
            } => tier1_hit > 0.0 || (miss_ios == 0 && tier2_hit < 1.0),
        }
    }

    /// Whether every operation issues the same integral number of IOs.
    pub fn is_deterministic(&self) -> bool {
        match *self {
            IoCountModel::FixedIos { ios } => ios.fract() == 0.0,
            IoCountModel::HitRatio { hit } => hit == 0.0 || hit == 1.0,
            IoCountModel::TwoTier { .. } => false,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        match *self {
            IoCountModel::FixedIos { ios } => {
                let whole = ios.trunc() as u32;
                let frac = ios.fract();
                if frac > 0.0 && rng.gen::<f64>() < frac {
                    whole + 1
                } else {
                    whole
                }
            }
            IoCountModel::HitRatio { hit } => u32::from(rng.gen::<f64>() >= hit),
            IoCountModel::TwoTier {
                tier1_hit,
                tier2_hit,
                miss_ios,
            } => {
                if rng.gen::<f64>() < tier1_hit {
                    0
                } else if rng.gen::<f64>() < tier2_hit {
                    1
                } else {
                    miss_ios
                }
            }
        }
    }
}

/// One sampled operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpShape {
    pub hops: u32,
    pub ios: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadProfile {
    pub name: String,
    pub hops_per_op: HopDistribution,
    pub io_count: IoCountModel,
    /// Informational; reads and writes are simulated identically.
    #[serde(default = "default_read_fraction")]
    pub read_fraction: f64,
}

fn default_read_fraction() -> f64 {
    1.0
}

/// Names accepted by [`preset`].
pub const PRESETS: [&str; 4] = ["tree-index", "block-cache", "two-tier-cache", "uniform-micro"];

/// Hop count used by presets whose traversal length is not pinned down.
pub const DEFAULT_PRESET_HOPS: u32 = 10;

/// Built-in profiles.
///
/// * `tree-index`: an in-memory tree walked before one value read per
///   operation.
/// * `block-cache`: a key scan inside a cached data block; 67 % of lookups hit
///   the block cache and need no IO.
/// * `two-tier-cache`: a DRAM-tier cache in front of an SSD tier; 34 % hit the
///   first tier, 73 % of the rest hit the second. A double miss reads the SSD
///   tier and writes the refilled item back.
/// * `uniform-micro`: the fixed-shape microbenchmark operation.
///
/// Hop counts default to [`DEFAULT_PRESET_HOPS`] and are configuration, not
/// measurements.
pub fn preset(name: &str) -> Result<WorkloadProfile> {
    let hops = HopDistribution::Fixed {
        hops: DEFAULT_PRESET_HOPS,
    };
    let (io_count, read_fraction) = match name {
        "tree-index" => (IoCountModel::FixedIos { ios: 1.0 }, 1.0),
        "block-cache" => (IoCountModel::HitRatio { hit: 0.67 }, 1.0),
        "two-tier-cache" => (
            IoCountModel::TwoTier {
                tier1_hit: 0.34,
                tier2_hit: 0.73,
                miss_ios: 2,
            },
            2.0 / 3.0,
        ),
        "uniform-micro" => (IoCountModel::FixedIos { ios: 1.0 }, 1.0),
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    Ok(WorkloadProfile {
        name: name.to_string(),
        hops_per_op: hops,
        io_count,
        read_fraction,
    })
}

impl WorkloadProfile {
    pub fn with_hops(mut self, hops: HopDistribution) -> Self {
        self.hops_per_op = hops;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.hops_per_op.validate()?;
        self.io_count.validate()?;
        if !(0.0..=1.0).contains(&self.read_fraction) {
            return Err(invalid("read_fraction", "must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn mean_ios(&self) -> f64 {
        self.io_count.mean()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> OpShape {
        OpShape {
            hops: self.hops_per_op.sample(rng),
            ios: self.io_count.sample(rng),
        }
    }

    /// Deterministic sequence of `n` operations.
    pub fn trace(&self, seed: u64, n: usize) -> Vec<OpShape> {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| self.sample(&mut rng)).collect()
    }
}

/// Folds a profile into per-IO model parameters: `m_accesses` becomes mean
/// hops per IO and `s_ios` mean IOs per operation, so their product is the
/// mean hop count.
pub fn aggregate_to_model(
    profile: &WorkloadProfile,
    base: &OperationModelParams,
) -> Result<OperationModelParams> {
    profile.validate()?;
    let ios = profile.mean_ios();
    if !(ios > 0.0) {
        return Err(Error::ZeroIoCount);
    }
    Ok(OperationModelParams {
        m_accesses: profile.hops_per_op.mean() / ios,
        s_ios: ios,
        ..*base
    })
}
