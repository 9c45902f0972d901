//! Ergodic constant and corrector on a torus by vanishing discount.

use super::discounted::discounted_on;
use super::{sup_change, Clock, ConvergenceReport, Record, Scheme, SolverConfig, Verdict};
use crate::error::{Error, Result};
use crate::fields::{Grid, ValueField};
use crate::hamiltonians::{eval_h_tilde, ControlMesh, Model};

#[derive(Debug, Clone)]
pub struct ErgodicSolution {
    /// Extrapolated ergodic constant.
    pub lambda: f64,
    /// `W = V_delta - V_delta(0)` at the smallest discount.
    pub corrector: ValueField,
    /// `delta V_delta` at the smallest discount.
    pub scaled_value: ValueField,
    /// `(delta, spatial mean of delta V_delta)` along the schedule.
    pub means: Vec<(f64, f64)>,
    /// `max - min` of `delta V_delta` at the smallest discount.
    pub flatness: f64,
    /// `max |W|`.
    pub corrector_sup: f64,
    /// Declared a-priori bound on `max |W|`, when controllability data is known.
    pub corrector_bound: Option<f64>,
    /// `max |H_tilde(x, DW)|` with central-difference gradients.
    pub cell_residual: f64,
    pub report: ConvergenceReport,
}

/// Solves the discounted problem on an all-periodic grid along a
/// decreasing schedule and extrapolates `lambda = lim delta V_delta`.
///
/// Each `V_delta` is computed to accuracy `tolerance / delta`, i.e.
/// `delta V_delta` to `tolerance`, warm-started from
/// `(delta_prev / delta) V_prev`. `lambda` is the linear extrapolation to
/// `delta = 0` through the last two means (for a halving schedule,
/// `2 m_K - m_{K-1}`).
pub fn solve_ergodic(
    model: &Model,
    mesh: &ControlMesh,
    grid: &Grid,
    config: &SolverConfig,
    schedule: &[f64],
) -> Result<ErgodicSolution> {
    config.validate()?;
    if !grid.axes.iter().all(|a| a.periodic) {
        return Err(Error::Precondition(
            "the ergodic solver needs every grid axis periodic".into(),
        ));
    }
    let data = model.problem().ergodic.as_ref();
    if let Some(d) = data {
        for (a, t) in grid.axes.iter().zip(&d.periods) {
            if (a.period() - t).abs() > 1e-9 * t {
                return Err(Error::Config(format!(
                    "grid period {} does not match the declared period {t}",
                    a.period()
                )));
            }
        }
    } else {
        return Err(Error::Precondition(
            "problem declares no periodic data".into(),
        ));
    }
    if schedule.is_empty()
        || schedule.windows(2).any(|w| !(w[1] < w[0]))
        || schedule.iter().any(|d| !(*d > 0.0))
    {
        return Err(Error::Config(
            "discount schedule must be positive and strictly decreasing".into(),
        ));
    }
    let scheme = Scheme::new(model, mesh, grid, config.step)?;
    let clock = Clock::start(config);
    let mut report = ConvergenceReport::new(scheme.warnings.clone());
    let mut means = Vec::new();
    let mut previous: Option<(f64, Vec<f64>)> = None;
    let mut scaled = Vec::new();
    let mut value = Vec::new();
    for &delta in schedule {
        let warm = previous
            .as_ref()
            .map(|(d, v)| v.iter().map(|x| x * d / delta).collect());
        let sol = discounted_on(&scheme, config, delta, warm, config.tolerance / delta)?;
        if sol.report.verdict != Verdict::Converged {
            report.verdict = sol.report.verdict;
            report.warnings.push(format!(
                "delta = {delta}: fixed point not reached after {} sweeps",
                sol.iterations
            ));
            break;
        }
        let dv: Vec<f64> = sol.field.values.iter().map(|v| delta * v).collect();
        let change = match &previous {
            Some((d, v)) => {
                let prev: Vec<f64> = v.iter().map(|x| d * x).collect();
                sup_change(&dv, &prev, None)
            }
            None => f64::INFINITY,
        };
        report.records.push(Record {
            param: delta,
            sup_change: change,
            residual: sol.residual,
            seconds: clock.seconds(),
        });
        means.push((delta, dv.iter().sum::<f64>() / dv.len() as f64));
        scaled = dv;
        value = sol.field.values.clone();
        previous = Some((delta, sol.field.values));
    }
    if means.is_empty() {
        return Err(Error::Precondition("no discount level converged".into()));
    }
    let lambda = match means.len() {
        1 => means[0].1,
        n => {
            let (d1, m1) = means[n - 2];
            let (d2, m2) = means[n - 1];
            m2 - d2 * (m1 - m2) / (d1 - d2)
        }
    };
    let (lo, hi) = scaled
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(*v), b.max(*v))
        });
    let flatness = hi - lo;
    if flatness > config.flatness_tolerance {
        report.verdict = Verdict::Diverged;
        report.warnings.push(format!(
            "delta V_delta oscillates by {flatness:.3e} > {:.3e}: controllability may fail",
            config.flatness_tolerance
        ));
    }
    let field = ValueField::new(grid.clone(), value)?;
    let origin = vec![0.0; grid.dim()];
    let anchor = field.interpolate(&origin)?.as_f64();
    let corrector = ValueField::new(
        grid.clone(),
        field.values.iter().map(|v| v - anchor).collect(),
    )?;
    let corrector_sup = corrector.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let corrector_bound = data.map(|d| d.corrector_bound(model.problem().growth.m));
    let cell_residual = cell_residual(model, mesh, &corrector, lambda)?;
    Ok(ErgodicSolution {
        lambda,
        corrector,
        scaled_value: ValueField::new(grid.clone(), scaled)?,
        means,
        flatness,
        corrector_sup,
        corrector_bound,
        cell_residual,
        report,
    })
}

/// `max_x |H_tilde(x, DW(x))|` with periodic central differences.
fn cell_residual(model: &Model, mesh: &ControlMesh, w: &ValueField, lambda: f64) -> Result<f64> {
    let grid = &w.grid;
    let mut worst = 0.0f64;
    for k in 0..grid.len() {
        let idx = grid.multi_index(k);
        let mut p = Vec::with_capacity(grid.dim());
        for (axis, a) in grid.axes.iter().enumerate() {
            let mut up = idx.clone();
            let mut down = idx.clone();
            up[axis] = (idx[axis] + 1) % a.nodes;
            down[axis] = (idx[axis] + a.nodes - 1) % a.nodes;
            let diff = w.values[grid.flat_index(&up)] - w.values[grid.flat_index(&down)];
            p.push(diff / (2.0 * a.spacing()));
        }
        let h = eval_h_tilde(model, mesh, &grid.node(k), &p, lambda)?;
        worst = worst.max(h.abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Axis;
    use crate::problem::{ControlProblem, ControlSet, ErgodicData, GrowthData};
    use std::f64::consts::PI;
    use std::sync::Arc;

    #[test]
    fn constant_cost_has_flat_corrector() {
        let p = ControlProblem::new(
            "flat",
            1,
            ControlSet::CompactBox {
                bounds: vec![(-1.0, 1.0)],
            },
            GrowthData::new(1, 1, 1.0, 0.0, 0.0),
            Arc::new(|_, a| vec![a[0]]),
            Arc::new(|_, _| 1.5),
        )
        .unwrap()
        .with_ergodic(ErgodicData {
            periods: vec![2.0 * PI],
            controllability_c: 1.0,
            controllability_gamma: 1.0,
        })
        .unwrap();
        let model = Model::new(&p).unwrap();
        let mesh = model.default_mesh().unwrap();
        let grid = Grid::new(vec![Axis::periodic(0.0, 2.0 * PI, 32)]).unwrap();
        let config = SolverConfig::default().with_step(0.1).with_tolerance(1e-6);
        let sol = solve_ergodic(&model, &mesh, &grid, &config, &[0.5, 0.25, 0.125]).unwrap();
        assert_eq!(sol.report.verdict, Verdict::Converged);
        assert!((sol.lambda - 1.5).abs() < 1e-3, "{}", sol.lambda);
        assert!(sol.corrector_sup < 1e-6);
        assert!(sol.flatness < 1e-6);
    }

    #[test]
    fn non_periodic_grid_is_rejected() {
        let p = crate::problem::builtin("ergodic-torus-1d").unwrap();
        let model = Model::new(&p).unwrap();
        let mesh = model.default_mesh().unwrap();
        let grid = Grid::parse("0:6.283185307179586:32").unwrap();
        let config = SolverConfig::default();
        assert!(matches!(
            solve_ergodic(&model, &mesh, &grid, &config, &[0.5]),
            Err(Error::Precondition(_))
        ));
    }
}
