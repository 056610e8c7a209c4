//! Named parameters that can be set from the config file, from flags, or swept
//! as grid axes.
//!
//! Durations are given in microseconds, sizes in bytes, bandwidths in bytes
//! per second and IO rates in operations per second. `inf` leaves a device
//! limit unbounded.

use std::fmt;
use std::str::FromStr;

use memtol::{us, OperationModelParams, SystemParams};

use crate::error::{CliError, Result};

/// Upper bound on the number of values one range token may expand to.
pub const MAX_RANGE_VALUES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    TMem,
    TSw,
    TIoPre,
    TIoPost,
    LMem,
    LIo,
    N,
    P,
    M,
    S,
    Rho,
    Epsilon,
    LDram,
    AMem,
    BMem,
    AIo,
    BIo,
    RIo,
}

impl Axis {
    pub const ALL: [Axis; 18] = [
        Axis::TMem,
        Axis::TSw,
        Axis::TIoPre,
        Axis::TIoPost,
        Axis::LMem,
        Axis::LIo,
        Axis::N,
        Axis::P,
        Axis::M,
        Axis::S,
        Axis::Rho,
        Axis::Epsilon,
        Axis::LDram,
        Axis::AMem,
        Axis::BMem,
        Axis::AIo,
        Axis::BIo,
        Axis::RIo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axis::TMem => "t_mem",
            Axis::TSw => "t_sw",
            Axis::TIoPre => "t_io_pre",
            Axis::TIoPost => "t_io_post",
            Axis::LMem => "l_mem",
            Axis::LIo => "l_io",
            Axis::N => "n",
            Axis::P => "p",
            Axis::M => "m",
            Axis::S => "s",
            Axis::Rho => "rho",
            Axis::Epsilon => "epsilon",
            Axis::LDram => "l_dram",
            Axis::AMem => "a_mem",
            Axis::BMem => "b_mem",
            Axis::AIo => "a_io",
            Axis::BIo => "b_io",
            Axis::RIo => "r_io",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Axis::TMem | Axis::TSw | Axis::TIoPre | Axis::TIoPost | Axis::LMem | Axis::LIo | Axis::LDram => "us",
            Axis::N | Axis::P => "count",
            Axis::M | Axis::S => "mean count",
            Axis::Rho | Axis::Epsilon => "fraction",
            Axis::AMem | Axis::AIo => "bytes",
            Axis::BMem | Axis::BIo => "bytes/s",
            Axis::RIo => "ops/s",
        }
    }

    fn bad(self, value: f64, reason: &str) -> CliError {
        CliError::BadValue {
            axis: self.name().to_string(),
            token: value.to_string(),
            reason: reason.to_string(),
        }
    }

    fn count(self, value: f64) -> Result<u32> {
        if value.fract() == 0.0 && value >= 1.0 && value <= f64::from(u32::MAX) {
            Ok(value as u32)
        } else {
            Err(self.bad(value, "expected a whole number >= 1"))
        }
    }

    fn limit(self, value: f64) -> Result<Option<f64>> {
        if value == f64::INFINITY {
            Ok(None)
        } else if value.is_finite() && value > 0.0 {
            Ok(Some(value))
        } else {
            Err(self.bad(value, "expected a positive number or inf"))
        }
    }

    /// Sets this parameter. Range checks beyond the value's form are left to
    /// the parameter types' own validation.
    pub fn apply(self, value: f64, p: &mut OperationModelParams, s: &mut SystemParams) -> Result<()> {
        if value.is_nan() {
            return Err(self.bad(value, "not a number"));
        }
        if value.is_infinite() && !matches!(self, Axis::BMem | Axis::BIo | Axis::RIo) {
            return Err(self.bad(value, "must be finite"));
        }
        match self {
            Axis::TMem => p.t_mem = us(value),
            Axis::TSw => p.t_sw = us(value),
            Axis::TIoPre => p.t_io_pre = us(value),
            Axis::TIoPost => p.t_io_post = us(value),
            Axis::LMem => p.l_mem = us(value),
            Axis::LIo => p.l_io = us(value),
            Axis::N => p.n_threads = self.count(value)?,
            Axis::P => p.prefetch_depth = self.count(value)?,
            Axis::M => p.m_accesses = value,
            Axis::S => p.s_ios = value,
            Axis::Rho => s.rho = value,
            Axis::Epsilon => s.epsilon = value,
            Axis::LDram => s.l_dram = us(value),
            Axis::AMem => s.a_mem = value,
            Axis::BMem => s.b_mem = self.limit(value)?,
            Axis::AIo => s.a_io = value,
            Axis::BIo => s.b_io = self.limit(value)?,
            Axis::RIo => s.r_io = self.limit(value)?,
        }
        Ok(())
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        let axis = match s {
            "n_threads" => Axis::N,
            "prefetch_depth" => Axis::P,
            "m_accesses" | "M" => Axis::M,
            "s_ios" | "S" => Axis::S,
            "N" => Axis::N,
            "P" => Axis::P,
            other => match Axis::ALL.iter().find(|a| a.name() == other) {
                Some(&a) => a,
                None => return Err(CliError::UnknownAxis(s.to_string())),
            },
        };
        Ok(axis)
    }
}

fn number(axis: &str, token: &str) -> Result<f64> {
    token.trim().parse::<f64>().map_err(|e| CliError::BadValue {
        axis: axis.to_string(),
        token: token.to_string(),
        reason: e.to_string(),
    })
}

/// Parses a comma-separated value list. Each item is a number or an inclusive
/// range `lo..hi` (step 1) or `lo..hi:step`.
pub fn parse_values(axis: &str, text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for token in text.split(',') {
        let token = token.trim();
        let Some((lo, rest)) = token.split_once("..") else {
            out.push(number(axis, token)?);
            continue;
        };
        let (hi, step) = match rest.split_once(':') {
            Some((hi, step)) => (hi, number(axis, step)?),
            None => (rest, 1.0),
        };
        let (lo, hi) = (number(axis, lo)?, number(axis, hi)?);
        let bad = |reason: &str| CliError::BadValue {
            axis: axis.to_string(),
            token: token.to_string(),
            reason: reason.to_string(),
        };
        if !(lo.is_finite() && hi.is_finite() && step.is_finite()) {
            return Err(bad("range bounds and step must be finite"));
        }
        if !(step > 0.0) || hi < lo {
            return Err(bad("expected lo <= hi and a positive step"));
        }
        let count = ((hi - lo) / step + 1e-9).floor() + 1.0;
        if count > MAX_RANGE_VALUES as f64 || out.len() + count as usize > MAX_RANGE_VALUES {
            return Err(bad("range expands to too many values"));
        }
        for i in 0..count as usize {
            out.push(lo + i as f64 * step);
        }
    }
    Ok(out)
}

/// Parses `name=values` as used by `--axis`.
pub fn parse_axis_arg(arg: &str) -> Result<(Axis, Vec<f64>)> {
    let (name, values) = arg
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("expected NAME=VALUES, got `{arg}`")))?;
    let axis: Axis = name.trim().parse()?;
    let values = parse_values(axis.name(), values)?;
    Ok((axis, values))
}
