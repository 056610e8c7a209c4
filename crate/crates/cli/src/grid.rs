//! Cartesian expansion of the configured axes.

use memtol::workload::aggregate_to_model;
use memtol::{OperationModelParams, SystemParams};

use crate::axis::Axis;
use crate::config::Plan;
use crate::error::{CliError, Result};

/// One grid point with every axis applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub index: usize,
    pub params: OperationModelParams,
    pub system: SystemParams,
}

/// Number of points, or `None` on overflow.
pub fn grid_size(axes: &[(Axis, Vec<f64>)]) -> Option<usize> {
    axes.iter().try_fold(1usize, |acc, (_, v)| acc.checked_mul(v.len()))
}

/// Expands the plan's axes in odometer order, last axis fastest. With no
/// axes the grid is the single baseline point.
pub fn expand(plan: &Plan) -> Result<Vec<Point>> {
    let size = grid_size(&plan.axes);
    match size {
        Some(n) if n <= plan.max_points => {}
        _ => {
            let shown = size.map_or_else(
                || {
                    let parts: Vec<String> = plan.axes.iter().map(|(_, v)| v.len().to_string()).collect();
                    parts.join(" x ")
                },
                |n| n.to_string(),
            );
            return Err(CliError::GridTooLarge {
                size: shown,
                limit: plan.max_points,
            });
        }
    }
    let n = size.unwrap_or(1);
    let mut out = Vec::with_capacity(n);
    let mut digits = vec![0usize; plan.axes.len()];
    for index in 0..n {
        let mut params = plan.params;
        let mut system = plan.system;
        for ((axis, values), &d) in plan.axes.iter().zip(&digits) {
            axis.apply(values[d], &mut params, &mut system)?;
        }
        if let Some(profile) = &plan.profile {
            params = aggregate_to_model(profile, &params)?;
        }
        params.validate()?;
        system.validate()?;
        out.push(Point { index, params, system });

        for (d, (_, values)) in digits.iter_mut().zip(&plan.axes).rev() {
            *d += 1;
            if *d < values.len() {
                break;
            }
            *d = 0;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;
    use memtol::us;

    fn plan(json: &str) -> Plan {
        Plan::from_config(&RunConfig::from_json(json).unwrap()).unwrap()
    }

    #[test]
    fn last_axis_runs_fastest() {
        let pts = expand(&plan(r#"{"axes": {"m": [1, 2], "l_mem": [3, 4, 5]}}"#)).unwrap();
        let got: Vec<(f64, f64)> = pts.iter().map(|p| (p.params.m_accesses, p.params.l_mem)).collect();
        let want: Vec<(f64, f64)> = [1.0, 2.0]
            .iter()
            .flat_map(|&m| [3.0, 4.0, 5.0].map(|l| (m, us(l))))
            .collect();
        assert_eq!(got, want);
        assert!(pts.iter().enumerate().all(|(i, p)| p.index == i));
    }

    #[test]
    fn no_axes_is_one_point() {
        let pts = expand(&plan("{}")).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].params, OperationModelParams::example());
    }

    #[test]
    fn size_cap() {
        let p = plan(r#"{"axes": {"m": [1, 2, 3], "l_mem": [1, 2]}, "max_points": 5}"#);
        assert!(matches!(expand(&p), Err(CliError::GridTooLarge { .. })));
        let huge = vec![(Axis::M, vec![1.0; 1 << 20]); 4];
        assert_eq!(grid_size(&huge), None);
    }

    #[test]
    fn invalid_point_is_rejected() {
        let p = plan(r#"{"axes": {"t_mem": [0.1, -1]}}"#);
        assert!(matches!(expand(&p), Err(CliError::Model(_))));
    }

    #[test]
    fn profile_sets_per_io_shape() {
        let p = plan(r#"{"profile": "block-cache"}"#);
        let pts = expand(&p).unwrap();
        let q = pts[0].params;
        assert!((q.m_accesses * q.s_ios - 10.0).abs() < 1e-12);
        assert!((q.s_ios - 0.33).abs() < 1e-12);
    }
}
