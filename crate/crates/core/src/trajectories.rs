//! Forward simulation, chattering controls and the brute-force oracle.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::extension::TimedControl;
use crate::hamiltonians::{ControlMesh, Model};
use crate::problem::ControlProblem;

/// States above this norm count as blow-up.
pub const BLOWUP_NORM: f64 = 1e12;

/// Samples of a state path and its accumulated cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub cost: Vec<f64>,
    /// Time at which the state norm first exceeded [`BLOWUP_NORM`].
    pub blowup: Option<f64>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Fixed-step RK4 for `(y, cost)` driven by a piecewise-constant control.
/// Each piece of `control` within `[start, horizon]` is split into equal
/// steps no longer than `dt`, so control switches fall on step boundaries.
/// The last control value is held beyond the final breakpoint.
pub(crate) fn rk4_piecewise(
    x: &[f64],
    control: &TimedControl,
    horizon: f64,
    dt: f64,
    rhs: impl Fn(&[f64], &[f64]) -> Result<(Vec<f64>, f64)>,
) -> Result<Path> {
    if !(dt > 0.0) {
        return Err(Error::Config(format!(
            "integration step must be positive, got {dt}"
        )));
    }
    let mut edges: Vec<f64> = control
        .breakpoints
        .iter()
        .copied()
        .filter(|&b| b < horizon)
        .collect();
    edges.push(horizon);
    let mut path = Path {
        times: vec![control.start()],
        states: vec![x.to_vec()],
        cost: vec![0.0],
        blowup: None,
    };
    let mut y = x.to_vec();
    let mut c = 0.0;
    let axpy = |y: &[f64], k: &[f64], h: f64| -> Vec<f64> {
        y.iter().zip(k).map(|(a, b)| a + h * b).collect()
    };
    for piece in edges.windows(2) {
        let (a, b) = (piece[0], piece[1]);
        let value = control.value_at(a).to_vec();
        let n = ((b - a) / dt - 1e-9).ceil().max(1.0) as usize;
        let h = (b - a) / n as f64;
        for k in 0..n {
            let (k1, c1) = rhs(&y, &value)?;
            let (k2, c2) = rhs(&axpy(&y, &k1, 0.5 * h), &value)?;
            let (k3, c3) = rhs(&axpy(&y, &k2, 0.5 * h), &value)?;
            let (k4, c4) = rhs(&axpy(&y, &k3, h), &value)?;
            for i in 0..y.len() {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            c += h / 6.0 * (c1 + 2.0 * c2 + 2.0 * c3 + c4);
            let t = if k + 1 == n {
                b
            } else {
                a + (k + 1) as f64 * h
            };
            path.times.push(t);
            path.states.push(y.clone());
            path.cost.push(c);
            if !(norm(&y) <= BLOWUP_NORM) {
                path.blowup = Some(t);
                return Ok(path);
            }
        }
    }
    Ok(path)
}

#[derive(Debug, Clone)]
pub struct Integration {
    pub path: Path,
    /// A-priori bound `(|x| + M t + M int |alpha|^p) exp(M (t + int |alpha|^p))`
    /// at each sample.
    pub bound: Vec<f64>,
    /// Whether `|y(t)|` stayed within `bound` at every sample.
    pub within_bound: bool,
}

/// RK4 simulation of `y' = f(y, alpha)`, `J' = l(y, alpha)` on `[0, T]`.
pub fn integrate(
    problem: &ControlProblem,
    x: &[f64],
    alpha: &TimedControl,
    horizon: f64,
    dt: f64,
) -> Result<Integration> {
    let path = rk4_piecewise(x, alpha, horizon, dt, |y, a| {
        Ok((problem.eval_dynamics(y, a)?, problem.eval_lagrangian(y, a)?))
    })?;
    let m = problem.growth.m;
    let p = problem.growth.p as i32;
    let x_norm = norm(x);
    let mut bound = Vec::with_capacity(path.times.len());
    let mut within_bound = true;
    for (t, y) in path.times.iter().zip(&path.states) {
        let mut effort = 0.0;
        for (k, a) in alpha.values.iter().enumerate() {
            let (lo, hi) = (alpha.breakpoints[k], alpha.breakpoints[k + 1]);
            let hi = if k + 1 == alpha.values.len() {
                hi.max(*t)
            } else {
                hi
            };
            if *t > lo {
                effort += norm(a).powi(p) * (t.min(hi) - lo);
            }
        }
        let b = (x_norm + m * t + m * effort) * (m * (t + effort)).exp();
        within_bound &= norm(y) <= b * (1.0 + 1e-9) + 1e-12;
        bound.push(b);
    }
    Ok(Integration {
        path,
        bound,
        within_bound,
    })
}

/// Square wave `(-1)^i` on `[i h, (i + 1) h)`, `h = t / n`.
pub fn chattering_control(n: usize, t: f64) -> Result<TimedControl> {
    if n == 0 || !(t > 0.0) {
        return Err(Error::Config(
            "chattering control needs n >= 1 and t > 0".into(),
        ));
    }
    let h = t / n as f64;
    let mut breakpoints: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
    breakpoints.push(t);
    let values = (0..n)
        .map(|i| vec![if i % 2 == 0 { 1.0 } else { -1.0 }])
        .collect();
    TimedControl::new(breakpoints, values)
}

/// Enumeration limit for [`brute_force_value`].
pub const ENUMERATION_BUDGET: f64 = 1e7;

/// Exact minimum of the Euler-discretized payoff over all `|mesh|^steps`
/// control sequences:
/// `min sum_k dt * L(y_k, c_k)`, `y_{k+1} = y_k + dt * F(y_k, c_k)`.
///
/// Sums are accumulated back to front, `dt L_0 + (dt L_1 + (...))`, the
/// same association the semi-Lagrangian recursion uses, so the two agree to
/// rounding when the scheme's feet land on grid nodes.
pub fn brute_force_value(
    model: &Model,
    x: &[f64],
    mesh: &ControlMesh,
    steps: usize,
    dt: f64,
) -> Result<f64> {
    mesh.validate(model)?;
    let required = (mesh.len() as f64).powi(steps as i32);
    if required > ENUMERATION_BUDGET {
        return Err(Error::Budget {
            required,
            limit: ENUMERATION_BUDGET,
        });
    }
    if steps == 0 {
        return Ok(0.0);
    }
    fn search(model: &Model, mesh: &ControlMesh, y: &[f64], left: usize, dt: f64) -> Result<f64> {
        if left == 0 {
            return Ok(0.0);
        }
        let mut best = f64::INFINITY;
        for c in &mesh.points {
            let v = branch(model, mesh, y, c, left, dt)?;
            best = best.min(v);
        }
        Ok(best)
    }
    fn branch(
        model: &Model,
        mesh: &ControlMesh,
        y: &[f64],
        c: &crate::hamiltonians::ControlPoint,
        left: usize,
        dt: f64,
    ) -> Result<f64> {
        let d = model.local(y, c)?;
        let next: Vec<f64> = y.iter().zip(&d.velocity).map(|(a, v)| a + dt * v).collect();
        Ok(dt * d.cost + search(model, mesh, &next, left - 1, dt)?)
    }
    let per_first: Vec<f64> = mesh
        .points
        .par_iter()
        .map(|c| branch(model, mesh, x, c, steps, dt))
        .collect::<Result<_>>()?;
    Ok(per_first.into_iter().fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{builtin, ControlSet, GrowthData, ScalarFn, VectorFn};
    use std::sync::Arc;

    fn toy(l: ScalarFn, f: VectorFn) -> ControlProblem {
        ControlProblem::new(
            "toy",
            1,
            ControlSet::CompactFinite {
                points: vec![vec![-1.0], vec![0.0], vec![1.0]],
            },
            GrowthData::new(1, 1, 1.0, 0.0, 0.0),
            f,
            l,
        )
        .unwrap()
    }

    #[test]
    fn rest_problem_accumulates_time() {
        let p = toy(Arc::new(|_, _| 1.0), Arc::new(|_, _| vec![0.0]));
        let alpha = TimedControl::constant(vec![1.0], 3.0).unwrap();
        let run = integrate(&p, &[0.4], &alpha, 3.0, 0.1).unwrap();
        assert!(run.path.states.iter().all(|y| y[0] == 0.4));
        assert!((run.path.cost.last().unwrap() - 3.0).abs() < 1e-12);
        assert!(run.within_bound);
    }

    #[test]
    fn worked_example_cost_grows() {
        let p = builtin("example-3-3").unwrap();
        let alpha = TimedControl::new(vec![0.0, 0.5, 3.0], vec![vec![-2.0], vec![0.0]]).unwrap();
        let run = integrate(&p, &[1.0, 0.0], &alpha, 3.0, 1e-3).unwrap();
        assert!(run.path.states.windows(2).all(|w| w[1][1] > w[0][1]));
        assert!(run.within_bound);
        assert!(*run.path.cost.last().unwrap() > 10.0);
    }

    #[test]
    fn rk4_is_fourth_order() {
        let f: VectorFn = Arc::new(|x, a| vec![x[0].sin() + a[0]]);
        let p = toy(Arc::new(|x, _| x[0] * x[0]), f);
        let alpha = TimedControl::constant(vec![1.0], 2.0).unwrap();
        let end = |dt: f64| {
            integrate(&p, &[0.3], &alpha, 2.0, dt)
                .unwrap()
                .path
                .states
                .last()
                .unwrap()[0]
        };
        let reference = end(1e-4);
        let e1 = (end(0.1) - reference).abs();
        let e2 = (end(0.05) - reference).abs();
        let ratio = e1 / e2;
        assert!((ratio - 16.0).abs() < 2.0, "ratio {ratio}");
    }

    #[test]
    fn blowup_is_flagged() {
        let f: VectorFn = Arc::new(|x, _| vec![x[0] * x[0]]);
        let p = toy(Arc::new(|_, _| 0.0), f);
        let alpha = TimedControl::constant(vec![0.0], 5.0).unwrap();
        let run = integrate(&p, &[1.0], &alpha, 5.0, 1e-3).unwrap();
        let t = run.path.blowup.expect("blow-up expected");
        assert!(t > 0.9 && t < 1.1, "{t}");
    }

    #[test]
    fn chattering_shape() {
        let c = chattering_control(2, 2.0).unwrap();
        assert_eq!(c.breakpoints, vec![0.0, 1.0, 2.0]);
        assert_eq!(c.values, vec![vec![1.0], vec![-1.0]]);
        assert_eq!(chattering_control(1, 1.0).unwrap().values, vec![vec![1.0]]);
        assert!(chattering_control(0, 1.0).is_err());
    }

    #[test]
    fn brute_force_examples() {
        let p = toy(Arc::new(|_, _| 1.0), Arc::new(|_, a| vec![a[0]]));
        let m = Model::new(&p).unwrap();
        let mesh = ControlMesh::finite(vec![vec![-1.0], vec![0.0], vec![1.0]]);
        assert!((brute_force_value(&m, &[0.3], &mesh, 4, 0.25).unwrap() - 1.0).abs() < 1e-15);

        let p = toy(Arc::new(|x, _| x[0] * x[0]), Arc::new(|_, a| vec![a[0]]));
        let m = Model::new(&p).unwrap();
        assert_eq!(brute_force_value(&m, &[0.0], &mesh, 5, 0.1).unwrap(), 0.0);
        // From x = 0.2 with dt = 0.1: move left twice then rest.
        let v = brute_force_value(&m, &[0.2], &mesh, 3, 0.1).unwrap();
        assert!((v - (0.1 * 0.04 + 0.1 * 0.01)).abs() < 1e-15, "{v}");

        let err = brute_force_value(&m, &[0.0], &mesh, 20, 0.1).unwrap_err();
        assert!(matches!(err, Error::Budget { .. }));
    }
}
