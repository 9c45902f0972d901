//! Discounted infinite-horizon value by fixed-point iteration.

use super::{sup_change, Clock, ConvergenceReport, Record, Scheme, SolverConfig, Verdict};
use crate::error::{Error, Result};
use crate::fields::{Grid, ValueField};
use crate::hamiltonians::{ControlMesh, Model};

/// Consecutive growing residuals tolerated before declaring divergence.
const GROWTH_STREAK: usize = 10;

#[derive(Debug, Clone)]
pub struct DiscountedSolution {
    pub field: ValueField,
    pub report: ConvergenceReport,
    pub iterations: usize,
    /// Last sup-norm change between sweeps.
    pub residual: f64,
}

/// Iterates `u <- min_c [dt L + exp(-delta dt theta) u(foot)]` from `u = 0`.
pub fn solve_discounted(
    model: &Model,
    mesh: &ControlMesh,
    grid: &Grid,
    config: &SolverConfig,
    delta: f64,
) -> Result<DiscountedSolution> {
    let scheme = Scheme::new(model, mesh, grid, config.step)?;
    discounted_on(&scheme, config, delta, None, config.tolerance)
}

/// Fixed point on a prebuilt scheme, optionally warm-started.
///
/// `accuracy` is the targeted sup-norm distance to the fixed point. With
/// `gamma = exp(-delta dt)` the iteration stops once the sweep change is
/// below `accuracy (1 - gamma)`, which bounds the distance by `accuracy`
/// whenever all rates are 1.
///
/// The operator is nonexpansive, so sweep changes never grow in exact
/// arithmetic; they may plateau while a front is transported at zero
/// discount. Only sustained growth is treated as divergence.
pub(crate) fn discounted_on(
    scheme: &Scheme,
    config: &SolverConfig,
    delta: f64,
    init: Option<Vec<f64>>,
    accuracy: f64,
) -> Result<DiscountedSolution> {
    config.validate()?;
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::Domain(format!(
            "discount rate must be positive, got {delta}"
        )));
    }
    let clock = Clock::start(config);
    let n = scheme.nodes();
    let mut u = init.unwrap_or_else(|| vec![0.0; n]);
    if u.len() != n {
        return Err(Error::Config("warm start has the wrong size".into()));
    }
    let factors = scheme.discount_factors(delta);
    let stop = accuracy * (1.0 - (-delta * scheme.step).exp());
    let mut next = vec![0.0; n];
    let mut report = ConvergenceReport::new(scheme.warnings.clone());
    report.verdict = Verdict::BudgetExhausted;
    let mut previous_residual = f64::INFINITY;
    let mut streak = 0;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut next_record = 1;
    while iterations < config.max_iterations {
        scheme.apply_discounted_into(&u, &factors, &mut next);
        residual = sup_change(&next, &u, None);
        std::mem::swap(&mut u, &mut next);
        iterations += 1;
        let done = residual <= stop;
        if iterations == next_record || done {
            report.records.push(Record {
                param: iterations as f64,
                sup_change: residual,
                residual,
                seconds: clock.seconds(),
            });
            next_record *= 2;
        }
        if residual.is_nan() {
            report.verdict = Verdict::Diverged;
            break;
        }
        if done {
            report.verdict = Verdict::Converged;
            break;
        }
        if residual > previous_residual * (1.0 + 1e-9) {
            streak += 1;
            if streak > GROWTH_STREAK {
                report.verdict = Verdict::Diverged;
                break;
            }
        } else {
            streak = 0;
        }
        previous_residual = residual;
    }
    if report.verdict != Verdict::Converged
        && report.records.last().map(|r| r.param) != Some(iterations as f64)
    {
        report.records.push(Record {
            param: iterations as f64,
            sup_change: residual,
            residual,
            seconds: clock.seconds(),
        });
    }
    Ok(DiscountedSolution {
        field: ValueField::new(scheme.grid.clone(), u)?,
        report,
        iterations,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{ControlProblem, ControlSet, GrowthData};
    use std::sync::Arc;

    fn constant_cost(c: f64) -> Model {
        let p = ControlProblem::new(
            "constant",
            1,
            ControlSet::CompactBox {
                bounds: vec![(-1.0, 1.0)],
            },
            GrowthData::new(1, 1, 1.0, 0.0, 0.0),
            Arc::new(|x, a| vec![a[0] * (1.0 + x[0] * x[0])]),
            Arc::new(move |_, _| c),
        )
        .unwrap();
        Model::new(&p).unwrap()
    }

    #[test]
    fn constant_cost_value_and_contraction() {
        let model = constant_cost(2.0);
        let mesh = model.default_mesh().unwrap();
        let grid = Grid::parse("-1:1:21").unwrap();
        let (delta, dt) = (0.5, 0.05);
        let config = SolverConfig::default().with_step(dt).with_tolerance(1e-9);
        let sol = solve_discounted(&model, &mesh, &grid, &config, delta).unwrap();
        assert_eq!(sol.report.verdict, Verdict::Converged);
        // Discrete fixed point: dt c / (1 - exp(-delta dt)), close to c / delta.
        let exact = dt * 2.0 / (1.0 - (-delta * dt).exp());
        for v in &sol.field.values {
            assert!((v - exact).abs() < 1e-8, "{v} vs {exact}");
        }
        assert!((exact - 4.0).abs() < 0.06);
        let gamma = (-delta * dt).exp();
        for w in sol.report.records.windows(2) {
            let steps = w[1].param - w[0].param;
            if w[0].residual > 1e-12 {
                assert!(w[1].residual / w[0].residual <= gamma.powf(steps) + 1e-6);
            }
        }
    }

    #[test]
    fn budget_and_bad_rate() {
        let model = constant_cost(1.0);
        let mesh = model.default_mesh().unwrap();
        let grid = Grid::parse("-1:1:11").unwrap();
        let config = SolverConfig::default().with_max_iterations(1);
        let sol = solve_discounted(&model, &mesh, &grid, &config, 0.5).unwrap();
        assert_eq!(sol.report.verdict, Verdict::BudgetExhausted);
        assert!(solve_discounted(&model, &mesh, &grid, &config, 0.0).is_err());
    }
}
