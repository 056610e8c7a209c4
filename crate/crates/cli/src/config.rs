//! Run configuration: a JSON document, optionally overridden by flags.
//!
//! ```json
//! {
//!   "params": { "l_mem": 5, "m": 10, "p": 10 },
//!   "axes": { "l_mem": [0.1, 1, 5, 10], "m": [1, 5, 10] },
//!   "variants": ["mask_only", "probabilistic"],
//!   "thread_grid": [8, 16, 32, 64],
//!   "seed": 1,
//!   "sim": { "hops": "geometric", "measure_ops": 20000 }
//! }
//! ```
//!
//! Parameter and axis names follow [`Axis`](crate::axis::Axis). Every field
//! is optional.

use std::path::PathBuf;

use indexmap::IndexMap;
use memtol::model::{Variant, DEFAULT_BASELINE_LATENCY, DEFAULT_TAIL_TOL};
use memtol::sim::{LatencyPoint, QueuePolicy};
use memtol::workload::{preset, WorkloadProfile};
use memtol::{us, OperationModelParams, SystemParams};
use serde::{Deserialize, Serialize};

use crate::axis::Axis;
use crate::error::{CliError, Result};

pub const DEFAULT_MAX_POINTS: usize = 100_000;
pub const DEFAULT_BAND: f64 = 0.10;
pub const DEFAULT_THREAD_GRID: [u32; 13] = [2, 4, 8, 12, 16, 24, 32, 48, 64, 96, 128, 192, 256];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PhasingKind {
    #[default]
    Staggered,
    Aligned,
}

/// How the simulator draws hops per operation when no profile is given. The
/// mean is always `m * s`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum HopShape {
    #[default]
    Fixed,
    Geometric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixturePoint {
    pub latency_us: f64,
    pub probability: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub measure_ops: Option<u64>,
    pub warmup_ops: Option<u64>,
    pub phasing: Option<PhasingKind>,
    pub hops: Option<HopShape>,
    pub io_latency_mixture: Option<Vec<MixturePoint>>,
    pub queue_policy: Option<QueuePolicy>,
}

/// A preset name or an inline profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileSpec {
    Preset(String),
    Inline(WorkloadProfile),
}

impl ProfileSpec {
    pub fn resolve(&self) -> Result<WorkloadProfile> {
        let profile = match self {
            ProfileSpec::Preset(name) => preset(name)?,
            ProfileSpec::Inline(p) => p.clone(),
        };
        profile.validate()?;
        Ok(profile)
    }
}

/// Parses a profile given as JSON: a preset name string or an inline object.
pub fn parse_profile(text: &str) -> Result<WorkloadProfile> {
    serde_json::from_str::<ProfileSpec>(text)?.resolve()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub params: IndexMap<String, f64>,
    #[serde(default)]
    pub axes: IndexMap<String, Vec<f64>>,
    pub variants: Option<Vec<Variant>>,
    pub include_sim: Option<bool>,
    pub thread_grid: Option<Vec<u32>>,
    pub seed: Option<u64>,
    pub baseline_latency_us: Option<f64>,
    pub tail_tol: Option<f64>,
    pub max_points: Option<usize>,
    pub band: Option<f64>,
    #[serde(default)]
    pub sim: SimSection,
    pub profile: Option<ProfileSpec>,
    pub format: Option<Format>,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Overlays `over` on `self`; set fields of `over` win.
    pub fn merge(mut self, over: RunConfig) -> Self {
        self.params.extend(over.params);
        self.axes.extend(over.axes);
        macro_rules! take {
            ($($f:ident).+) => {
                if over.$($f).+.is_some() {
                    self.$($f).+ = over.$($f).+;
                }
            };
        }
        take!(variants);
        take!(include_sim);
        take!(thread_grid);
        take!(seed);
        take!(baseline_latency_us);
        take!(tail_tol);
        take!(max_points);
        take!(band);
        take!(sim.measure_ops);
        take!(sim.warmup_ops);
        take!(sim.phasing);
        take!(sim.hops);
        take!(sim.io_latency_mixture);
        take!(sim.queue_policy);
        take!(profile);
        take!(format);
        take!(output);
        self
    }
}

/// Fully resolved run settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub params: OperationModelParams,
    pub system: SystemParams,
    pub axes: Vec<(Axis, Vec<f64>)>,
    pub variants: Option<Vec<Variant>>,
    pub include_sim: bool,
    pub thread_grid: Vec<u32>,
    pub seed: u64,
    pub baseline_latency: f64,
    pub tail_tol: f64,
    pub max_points: usize,
    pub band: f64,
    pub measure_ops: u64,
    pub warmup_ops: Option<u64>,
    pub phasing: PhasingKind,
    pub hops: HopShape,
    pub io_latency_mixture: Vec<LatencyPoint>,
    pub queue_policy: QueuePolicy,
    pub profile: Option<WorkloadProfile>,
    pub format: Format,
    pub output: Option<PathBuf>,
}

impl Plan {
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        let mut params = OperationModelParams::example();
        let mut system = SystemParams::unbounded();
        for (name, &value) in &cfg.params {
            name.parse::<Axis>()?.apply(value, &mut params, &mut system)?;
        }

        let mut axes: Vec<(Axis, Vec<f64>)> = Vec::with_capacity(cfg.axes.len());
        for (name, values) in &cfg.axes {
            let axis: Axis = name.parse()?;
            if values.is_empty() {
                return Err(CliError::Usage(format!("axis `{axis}` has no values")));
            }
            if axes.iter().any(|(a, _)| *a == axis) {
                return Err(CliError::Usage(format!("axis `{axis}` given twice")));
            }
            axes.push((axis, values.clone()));
        }

        let profile = cfg.profile.as_ref().map(ProfileSpec::resolve).transpose()?;
        if profile.is_some() {
            let per_io = |a: Axis| a == Axis::M || a == Axis::S;
            let clash = axes.iter().map(|(a, _)| *a).find(|&a| per_io(a)).or_else(|| {
                cfg.params
                    .keys()
                    .filter_map(|k| k.parse::<Axis>().ok())
                    .find(|&a| per_io(a))
            });
            if let Some(a) = clash {
                return Err(CliError::Usage(format!(
                    "`{a}` is derived from the workload profile and cannot be set"
                )));
            }
        }

        let thread_grid = cfg
            .thread_grid
            .clone()
            .unwrap_or_else(|| DEFAULT_THREAD_GRID.to_vec());
        if thread_grid.is_empty() || thread_grid.contains(&0) {
            return Err(CliError::Usage("thread grid must be non-empty and positive".into()));
        }

        let baseline_latency = us(cfg.baseline_latency_us.unwrap_or(DEFAULT_BASELINE_LATENCY * 1e6));
        if !(baseline_latency >= 0.0 && baseline_latency.is_finite()) {
            return Err(CliError::Usage("baseline latency must be >= 0".into()));
        }
        let tail_tol = cfg.tail_tol.unwrap_or(DEFAULT_TAIL_TOL);
        if !(tail_tol > 0.0 && tail_tol < 1.0) {
            return Err(CliError::Usage(format!("tail tolerance must lie in (0, 1), got {tail_tol}")));
        }
        let band = cfg.band.unwrap_or(DEFAULT_BAND);
        if !(band >= 0.0 && band.is_finite()) {
            return Err(CliError::Usage(format!("band must be >= 0, got {band}")));
        }
        let measure_ops = cfg.sim.measure_ops.unwrap_or(20_000);
        if measure_ops == 0 {
            return Err(CliError::Usage("measure_ops must be >= 1".into()));
        }

        let io_latency_mixture = cfg
            .sim
            .io_latency_mixture
            .iter()
            .flatten()
            .map(|pt| LatencyPoint {
                latency: us(pt.latency_us),
                probability: pt.probability,
            })
            .collect();

        Ok(Plan {
            params,
            system,
            axes,
            variants: cfg.variants.clone(),
            include_sim: cfg.include_sim.unwrap_or(true),
            thread_grid,
            seed: cfg.seed.unwrap_or(0),
            baseline_latency,
            tail_tol,
            max_points: cfg.max_points.unwrap_or(DEFAULT_MAX_POINTS),
            band,
            measure_ops,
            warmup_ops: cfg.sim.warmup_ops,
            phasing: cfg.sim.phasing.unwrap_or_default(),
            hops: cfg.sim.hops.unwrap_or_default(),
            io_latency_mixture,
            queue_policy: cfg.sim.queue_policy.unwrap_or_default(),
            profile,
            format: cfg.format.unwrap_or_default(),
            output: cfg.output.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let plan = Plan::from_config(&RunConfig::from_json("{}").unwrap()).unwrap();
        assert_eq!(plan.params, OperationModelParams::example());
        assert!(plan.axes.is_empty());
        assert_eq!(plan.thread_grid, DEFAULT_THREAD_GRID);
        assert_eq!(plan.band, 0.10);
    }

    #[test]
    fn rejects_unknown_fields_and_names() {
        assert!(RunConfig::from_json(r#"{"paramz": {}}"#).is_err());
        let cfg = RunConfig::from_json(r#"{"axes": {"latency": [1]}}"#).unwrap();
        match Plan::from_config(&cfg) {
            Err(CliError::UnknownAxis(t)) => assert_eq!(t, "latency"),
            other => panic!("{other:?}"),
        }
        let cfg = RunConfig::from_json(r#"{"axes": {"m": []}}"#).unwrap();
        assert!(Plan::from_config(&cfg).is_err());
    }

    #[test]
    fn flags_win_over_file() {
        let file = RunConfig::from_json(
            r#"{"params": {"l_mem": 2, "m": 5}, "seed": 3, "sim": {"hops": "geometric"}}"#,
        )
        .unwrap();
        let mut flags = RunConfig::default();
        flags.params.insert("l_mem".into(), 8.0);
        flags.seed = Some(9);
        let plan = Plan::from_config(&file.merge(flags)).unwrap();
        assert_eq!(plan.params.l_mem, us(8.0));
        assert_eq!(plan.params.m_accesses, 5.0);
        assert_eq!(plan.seed, 9);
        assert_eq!(plan.hops, HopShape::Geometric);
    }

    #[test]
    fn profiles_by_name_or_inline() {
        assert_eq!(parse_profile(r#""block-cache""#).unwrap().name, "block-cache");
        let inline = r#"{"name": "x", "hops_per_op": {"kind": "geometric", "mean": 12},
                         "io_count": {"kind": "fixed_ios", "ios": 2}}"#;
        assert_eq!(parse_profile(inline).unwrap().mean_ios(), 2.0);
        assert!(parse_profile(r#""no-such""#).is_err());

        let cfg = RunConfig::from_json(r#"{"profile": "tree-index", "axes": {"m": [1]}}"#).unwrap();
        assert!(Plan::from_config(&cfg).is_err());
    }
}
