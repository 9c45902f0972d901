//! Limits `t -> infinity` of `V(t, .)` and `delta -> 0` of `V_delta`.

use super::discounted::discounted_on;
use super::finite::Marcher;
use super::{sup_change, Clock, ConvergenceReport, Record, Scheme, SolverConfig, Verdict};
use crate::error::{Error, Result};
use crate::fields::{Grid, ValueField};
use crate::hamiltonians::{ControlMesh, Model};

#[derive(Debug, Clone)]
pub struct LimitSolution {
    /// Limit field; nodes detected as diverging hold the infinite state.
    pub field: ValueField,
    pub report: ConvergenceReport,
    /// Nodes still changing when the schedule ran out (empty on convergence).
    pub provisional: Vec<usize>,
}

/// Node-wise bookkeeping shared by both limit drivers.
struct Tracker {
    threshold: f64,
    slope: f64,
    /// `(param, values)` at the last four schedule points, oldest first.
    history: Vec<(f64, Vec<f64>)>,
    infinite: Vec<bool>,
}

impl Tracker {
    fn new(config: &SolverConfig, nodes: usize) -> Self {
        Tracker {
            threshold: config.infinity_threshold,
            slope: config.growth_slope,
            history: Vec::new(),
            infinite: vec![false; nodes],
        }
    }

    /// Adds a schedule point (`growth_param` increases along the schedule)
    /// and returns the sup change to the previous point over nodes not
    /// flagged infinite.
    ///
    /// Flagged nodes are frozen at `+inf` by the drivers, so later solves
    /// treat them as infinite and only nodes avoiding them stay finite.
    fn push(&mut self, growth_param: f64, values: Vec<f64>) -> Option<f64> {
        self.history.push((growth_param, values));
        if self.history.len() > 4 {
            self.history.remove(0);
        }
        if self.history.len() == 4 {
            let h = &self.history;
            let last = &h[3].1;
            for (k, flag) in self.infinite.iter_mut().enumerate() {
                if *flag || !(last[k] > self.threshold) {
                    continue;
                }
                *flag =
                    (1..4).all(|j| h[j].1[k] - h[j - 1].1[k] >= self.slope * (h[j].0 - h[j - 1].0));
            }
        }
        let n = self.history.len();
        (n >= 2).then(|| {
            sup_change(
                &self.history[n - 1].1,
                &self.history[n - 2].1,
                Some(&self.infinite),
            )
        })
    }

    fn provisional(&self, tolerance: f64) -> Vec<usize> {
        let n = self.history.len();
        if n < 2 {
            return (0..self.infinite.len())
                .filter(|&k| !self.infinite[k])
                .collect();
        }
        let (a, b) = (&self.history[n - 1].1, &self.history[n - 2].1);
        (0..a.len())
            .filter(|&k| {
                let settled =
                    (a[k].is_infinite() && b[k].is_infinite()) || (a[k] - b[k]).abs() < tolerance;
                !self.infinite[k] && !settled
            })
            .collect()
    }

    /// Sets flagged nodes to `+inf` in `values`.
    fn freeze(&self, values: &mut [f64]) {
        for (v, &inf) in values.iter_mut().zip(&self.infinite) {
            if inf {
                *v = f64::INFINITY;
            }
        }
    }

    fn field(&self, grid: &Grid) -> Result<ValueField> {
        let mut values = self.history.last().map(|h| h.1.clone()).unwrap_or_default();
        self.freeze(&mut values);
        ValueField::new(grid.clone(), values)
    }
}

fn check_schedule(schedule: &[f64], increasing: bool) -> Result<()> {
    let ordered = schedule
        .windows(2)
        .all(|w| if increasing { w[1] > w[0] } else { w[1] < w[0] });
    if schedule.is_empty() || !ordered || schedule.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Config(format!(
            "schedule must be nonempty, positive and strictly {}",
            if increasing {
                "increasing"
            } else {
                "decreasing"
            }
        )));
    }
    Ok(())
}

/// `Sigma = lim V(t, .)` along an increasing horizon schedule. Stops at
/// the first schedule point whose change to the previous one is below the
/// tolerance (over nodes not flagged infinite).
pub fn limit_finite_horizon(
    model: &Model,
    mesh: &ControlMesh,
    grid: &Grid,
    config: &SolverConfig,
    schedule: &[f64],
) -> Result<LimitSolution> {
    config.validate()?;
    check_schedule(schedule, true)?;
    let scheme = Scheme::new(model, mesh, grid, config.step)?;
    let clock = Clock::start(config);
    let mut marcher = Marcher::new(&scheme, config);
    let mut tracker = Tracker::new(config, grid.len());
    let mut report = ConvergenceReport::new(scheme.warnings.clone());
    report.verdict = Verdict::BudgetExhausted;
    for &t in schedule {
        let level = (t / scheme.step - 1e-9).ceil() as usize;
        if level > config.max_iterations {
            break;
        }
        while marcher.level < level {
            marcher.advance();
        }
        let change = tracker.push(t, marcher.current.clone());
        tracker.freeze(&mut marcher.current);
        tracker.freeze(&mut marcher.previous);
        let residual = super::stationary_residual_values(&scheme, &marcher.current);
        report.records.push(Record {
            param: t,
            sup_change: change.unwrap_or(f64::INFINITY),
            residual,
            seconds: clock.seconds(),
        });
        if change.is_some_and(|c| c < config.tolerance) {
            report.verdict = Verdict::Converged;
            break;
        }
    }
    report.warnings.extend(marcher.warnings);
    finish(tracker, report, grid, config)
}

fn finish(
    tracker: Tracker,
    report: ConvergenceReport,
    grid: &Grid,
    config: &SolverConfig,
) -> Result<LimitSolution> {
    let provisional = if report.verdict == Verdict::Converged {
        Vec::new()
    } else {
        tracker.provisional(config.tolerance)
    };
    let mut report = report;
    let flagged = tracker.infinite.iter().filter(|&&f| f).count();
    if flagged > 0 {
        report
            .warnings
            .push(format!("{flagged} nodes detected as infinite"));
    }
    if !provisional.is_empty() {
        report.warnings.push(format!(
            "{} nodes hold provisional values",
            provisional.len()
        ));
    }
    Ok(LimitSolution {
        field: tracker.field(grid)?,
        report,
        provisional,
    })
}

/// `lim V_delta` along a decreasing discount schedule, each solve warm
/// started from the previous one (which lies below it). Divergence is
/// measured against `1 / delta`.
pub fn limit_discounted(
    model: &Model,
    mesh: &ControlMesh,
    grid: &Grid,
    config: &SolverConfig,
    schedule: &[f64],
) -> Result<LimitSolution> {
    config.validate()?;
    check_schedule(schedule, false)?;
    let scheme = Scheme::new(model, mesh, grid, config.step)?;
    let clock = Clock::start(config);
    let mut tracker = Tracker::new(config, grid.len());
    let mut report = ConvergenceReport::new(scheme.warnings.clone());
    report.verdict = Verdict::BudgetExhausted;
    let mut warm: Option<Vec<f64>> = None;
    for &delta in schedule {
        let sol = discounted_on(&scheme, config, delta, warm.take(), config.tolerance)?;
        if sol.report.verdict != Verdict::Converged {
            report.verdict = sol.report.verdict;
            report.warnings.push(format!(
                "delta = {delta}: fixed point not reached after {} sweeps",
                sol.iterations
            ));
            break;
        }
        let change = tracker.push(1.0 / delta, sol.field.values.clone());
        report.records.push(Record {
            param: delta,
            sup_change: change.unwrap_or(f64::INFINITY),
            residual: sol.residual,
            seconds: clock.seconds(),
        });
        let mut next = sol.field.values;
        tracker.freeze(&mut next);
        warm = Some(next);
        if change.is_some_and(|c| c < config.tolerance) {
            report.verdict = Verdict::Converged;
            break;
        }
    }
    finish(tracker, report, grid, config)
}
