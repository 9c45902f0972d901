//! Finite-horizon marching from `V(0, .) = 0`.

use super::{
    sup_change, Clock, ConvergenceReport, HorizonMode, Record, Scheme, SolverConfig, Verdict,
};
use crate::error::{Error, Result};
use crate::fields::{Grid, ValueField};
use crate::hamiltonians::{ControlMesh, Model};

/// Inner sweeps per physical time level before giving up on the level.
const INNER_SWEEP_CAP: usize = 20_000;

/// Marches time levels `t_k = k dt`.
///
/// In physical mode a control with time rate `theta` advances the clock by
/// `theta dt`, so the level update is the implicit relation
/// `V_k = min_c [dt L + theta V_{k-1}(foot) + (1 - theta) V_k(foot)]`
/// (linear interpolation in time between the two levels). It is solved by
/// sweeping upward from `V_{k-1}`. When every rate is 1 (compact problems)
/// or in extended mode the update is the explicit step
/// `V_k = min_c [dt L + V_{k-1}(foot)]`.
pub(crate) struct Marcher<'a> {
    scheme: &'a Scheme,
    implicit: bool,
    inner_tolerance: f64,
    pub level: usize,
    pub current: Vec<f64>,
    pub previous: Vec<f64>,
    scratch: Vec<f64>,
    pub warnings: Vec<String>,
}

impl<'a> Marcher<'a> {
    pub(crate) fn new(scheme: &'a Scheme, config: &SolverConfig) -> Self {
        let n = scheme.nodes();
        Marcher {
            scheme,
            implicit: config.horizon_mode == HorizonMode::Physical && !scheme.unit_rates(),
            inner_tolerance: config.tolerance * 1e-3,
            level: 0,
            current: vec![0.0; n],
            previous: vec![0.0; n],
            scratch: vec![0.0; n],
            warnings: Vec::new(),
        }
    }

    pub(crate) fn advance(&mut self) {
        std::mem::swap(&mut self.previous, &mut self.current);
        if !self.implicit {
            self.scheme
                .apply_stationary_into(&self.previous, &mut self.current);
        } else {
            self.current.copy_from_slice(&self.previous);
            let mut sweeps = 0;
            loop {
                self.scheme
                    .apply_level_into(&self.previous, &self.current, &mut self.scratch);
                let change = sup_change(&self.scratch, &self.current, None);
                std::mem::swap(&mut self.current, &mut self.scratch);
                sweeps += 1;
                if change <= self.inner_tolerance {
                    break;
                }
                if sweeps >= INNER_SWEEP_CAP {
                    if self.warnings.is_empty() {
                        self.warnings.push(format!(
                            "level {}: implicit update stopped after {sweeps} sweeps (change {change:.3e})",
                            self.level + 1
                        ));
                    }
                    break;
                }
            }
        }
        self.level += 1;
    }

    /// `sup |V_k - V_{k-1}| / dt`.
    pub(crate) fn rate_of_change(&self) -> f64 {
        sup_change(&self.current, &self.previous, None) / self.scheme.step
    }
}

#[derive(Debug, Clone)]
pub struct FiniteHorizonSolution {
    /// `(t, V(t, .))` for every requested time that was reached.
    pub snapshots: Vec<(f64, ValueField)>,
    pub report: ConvergenceReport,
}

/// Computes `V(t, .)` at the requested times (physical time, or extended
/// time `s` in [`HorizonMode::Extended`]). A time between two levels is
/// interpolated linearly.
pub fn solve_finite_horizon(
    model: &Model,
    mesh: &ControlMesh,
    grid: &Grid,
    config: &SolverConfig,
    times: &[f64],
) -> Result<FiniteHorizonSolution> {
    let scheme = Scheme::new(model, mesh, grid, config.step)?;
    solve_finite_horizon_on(&scheme, config, times)
}

pub fn solve_finite_horizon_on(
    scheme: &Scheme,
    config: &SolverConfig,
    times: &[f64],
) -> Result<FiniteHorizonSolution> {
    config.validate()?;
    if times.is_empty()
        || times.iter().any(|t| !(*t >= 0.0))
        || times.windows(2).any(|w| w[1] < w[0])
    {
        return Err(Error::Config(
            "snapshot times must be nonnegative and nondecreasing".into(),
        ));
    }
    let clock = Clock::start(config);
    let mut marcher = Marcher::new(scheme, config);
    let mut report = ConvergenceReport::new(scheme.warnings.clone());
    let mut snapshots: Vec<(f64, ValueField)> = Vec::new();
    let dt = scheme.step;
    for &t in times {
        let r = t / dt;
        let exact = (r - r.round()).abs() <= 1e-9 * r.max(1.0);
        let needed = if exact {
            r.round() as usize
        } else {
            r.ceil() as usize
        };
        if needed > config.max_iterations {
            report.verdict = Verdict::BudgetExhausted;
            break;
        }
        while marcher.level < needed {
            marcher.advance();
        }
        let values: Vec<f64> = if exact || needed == 0 {
            marcher.current.clone()
        } else {
            let theta = r - (needed - 1) as f64;
            marcher
                .previous
                .iter()
                .zip(&marcher.current)
                .map(|(a, b)| (1.0 - theta) * a + theta * b)
                .collect()
        };
        let change = match snapshots.last() {
            Some((_, prev)) => sup_change(&values, &prev.values, None),
            None => sup_change(&values, &vec![0.0; values.len()], None),
        };
        let residual = if marcher.level == 0 {
            0.0
        } else {
            marcher.rate_of_change()
        };
        report.records.push(Record {
            param: t,
            sup_change: change,
            residual,
            seconds: clock.seconds(),
        });
        snapshots.push((t, ValueField::new(scheme.grid.clone(), values)?));
    }
    report.warnings.extend(marcher.warnings);
    Ok(FiniteHorizonSolution { snapshots, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{builtin, ControlProblem, ControlSet, GrowthData};
    use std::sync::Arc;

    #[test]
    fn unit_cost_gives_elapsed_time() {
        let p = ControlProblem::new(
            "unit",
            1,
            ControlSet::CompactBox {
                bounds: vec![(-1.0, 1.0)],
            },
            GrowthData::new(1, 1, 1.0, 0.0, 0.0),
            Arc::new(|_, a| vec![a[0]]),
            Arc::new(|_, _| 1.0),
        )
        .unwrap();
        let model = Model::new(&p).unwrap();
        let mesh = model.default_mesh().unwrap();
        let grid = Grid::parse("-1:1:41").unwrap();
        let config = SolverConfig::default().with_step(0.05);
        let sol = solve_finite_horizon(&model, &mesh, &grid, &config, &[0.5, 1.0, 1.025]).unwrap();
        for (t, field) in &sol.snapshots {
            for v in &field.values {
                assert!((v - t).abs() < 1e-12, "t = {t}: {v}");
            }
        }
        assert_eq!(sol.report.verdict, Verdict::Converged);
    }

    #[test]
    fn lqr_values_increase_with_the_horizon() {
        let model = Model::new(&builtin("lqr-1d").unwrap()).unwrap();
        let mesh = model.default_mesh().unwrap();
        let grid = Grid::parse("-2:2:81").unwrap();
        let config = SolverConfig::default().with_step(0.05);
        let sol = solve_finite_horizon(&model, &mesh, &grid, &config, &[0.5, 1.0, 2.0]).unwrap();
        for pair in sol.snapshots.windows(2) {
            for (a, b) in pair[0].1.values.iter().zip(&pair[1].1.values) {
                assert!(b >= &(a - 1e-9));
            }
        }
    }

    #[test]
    fn horizon_budget_is_enforced() {
        let model = Model::new(&builtin("lqr-1d").unwrap()).unwrap();
        let mesh = model.default_mesh().unwrap();
        let grid = Grid::parse("-1:1:11").unwrap();
        let config = SolverConfig::default()
            .with_step(0.1)
            .with_max_iterations(5);
        let sol = solve_finite_horizon(&model, &mesh, &grid, &config, &[0.2, 3.0]).unwrap();
        assert_eq!(sol.report.verdict, Verdict::BudgetExhausted);
        assert_eq!(sol.snapshots.len(), 1);
    }
}
