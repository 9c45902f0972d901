//! Kruzkov-transformed boundary value problem `U = 1 - exp(-V)`, `U = 0` on
//! the target.

use super::{sup_change, Clock, ConvergenceReport, Record, Scheme, SolverConfig, Verdict};
use crate::error::{Error, Result};
use crate::fields::{Grid, ValueField};
use crate::hamiltonians::{ControlMesh, Model};
use crate::problem::TargetSet;

#[derive(Debug, Clone)]
pub struct KruzkovSolution {
    /// `U`, in `[0, 1]`.
    pub u: ValueField,
    /// `V = -log(1 - U)`, infinite where `1 - U <= exp(-threshold)`.
    pub v: ValueField,
    /// `U < 1 - exp(-threshold)`: nodes in the recovered domain of `V`.
    pub domain: Vec<bool>,
    pub report: ConvergenceReport,
    /// Node values seen outside `[0, 1]`, summed over all iterations.
    pub range_violations: usize,
}

/// Iterates `U <- min_c [(1 - e^{-dt L}) + e^{-dt L} U(foot)]` from `U = 0`
/// with `U` pinned to 0 on target nodes, until the sweep change drops
/// below the configured tolerance.
///
/// Note that `1 - U` underflows to 0 once `V` exceeds about 36, so the
/// recovered `V` is reliable well below that and infinite beyond it.
pub fn solve_kruzkov(
    model: &Model,
    mesh: &ControlMesh,
    grid: &Grid,
    config: &SolverConfig,
    target: &TargetSet,
) -> Result<KruzkovSolution> {
    config.validate()?;
    let scheme = Scheme::new(model, mesh, grid, config.step)?;
    let pinned: Vec<bool> = (0..grid.len())
        .map(|k| target.contains(&grid.node(k)))
        .collect();
    if !pinned.iter().any(|&p| p) {
        return Err(Error::Config(format!(
            "target {} contains no grid node",
            target.label
        )));
    }
    let clock = Clock::start(config);
    let factors = scheme.kruzkov_factors();
    let n = grid.len();
    let mut u = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut report = ConvergenceReport::new(scheme.warnings.clone());
    report.verdict = Verdict::BudgetExhausted;
    let mut range_violations = 0;
    let mut next_record = 1;
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    while iterations < config.max_iterations {
        scheme.apply_kruzkov_into(&u, &factors, &pinned, &mut next);
        range_violations += next.iter().filter(|v| !(0.0..=1.0).contains(*v)).count();
        residual = sup_change(&next, &u, None);
        std::mem::swap(&mut u, &mut next);
        iterations += 1;
        let done = residual <= config.tolerance;
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
    let floor = (-config.infinity_threshold).exp();
    let v: Vec<f64> = u
        .iter()
        .map(|&x| {
            let gap = 1.0 - x;
            if gap <= floor {
                f64::INFINITY
            } else {
                -gap.ln()
            }
        })
        .collect();
    let domain = u.iter().map(|&x| x < 1.0 - floor).collect();
    Ok(KruzkovSolution {
        u: ValueField::new(grid.clone(), u)?,
        v: ValueField::new(grid.clone(), v)?,
        domain,
        report,
        range_violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{ControlProblem, ControlSet, GrowthData};
    use std::sync::Arc;

    /// `y' = a`, `|a| <= 1`, `l = 1`: `V(x) = |x|` (minimum time to 0).
    fn min_time() -> Model {
        let p = ControlProblem::new(
            "min-time",
            1,
            ControlSet::CompactBox {
                bounds: vec![(-1.0, 1.0)],
            },
            GrowthData::new(1, 1, 1.0, 0.0, 0.0),
            Arc::new(|_, a| vec![a[0]]),
            Arc::new(|_, _| 1.0),
        )
        .unwrap();
        Model::new(&p).unwrap()
    }

    #[test]
    fn minimum_time_is_recovered() {
        let model = min_time();
        let mesh = model.default_mesh().unwrap();
        let grid = Grid::parse("-1:1:41").unwrap();
        let config = SolverConfig::default()
            .with_step(0.05)
            .with_tolerance(1e-12);
        let sol =
            solve_kruzkov(&model, &mesh, &grid, &config, &TargetSet::point(vec![0.0])).unwrap();
        assert_eq!(sol.report.verdict, Verdict::Converged);
        assert_eq!(sol.range_violations, 0);
        for k in 0..grid.len() {
            let x = grid.node(k)[0];
            assert!((sol.v.values[k] - x.abs()).abs() < 1e-9, "x = {x}");
            assert!(sol.domain[k]);
        }
        assert_eq!(sol.u.values[20], 0.0);
    }

    #[test]
    fn target_off_grid_is_rejected() {
        let model = min_time();
        let mesh = model.default_mesh().unwrap();
        let grid = Grid::parse("-1:1:4").unwrap();
        let config = SolverConfig::default();
        let err = solve_kruzkov(&model, &mesh, &grid, &config, &TargetSet::point(vec![0.0]));
        assert!(matches!(err, Err(Error::Config(_))));
    }
}
