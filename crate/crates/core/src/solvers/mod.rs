//! Semi-Lagrangian solvers and the limit drivers.
//!
//! Every solver works on a precomputed [`Scheme`]: for each grid node `x`
//! and mesh control `c` it stores the step cost `dt * L(x, c)`, the time
//! rate `theta(c)` and the multilinear stencil of the foot `x + dt * F(x,
//! c)`. Feet outside the grid are clamped to its box, which amounts to
//! ghost nodes holding the outermost layer's values.
//!
//! Sweeps are Jacobi (read the old field, write a new one) and run in
//! parallel over nodes.

mod discounted;
mod ergodic;
mod finite;
mod kruzkov;
mod limits;

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{Grid, ValueField};
use crate::hamiltonians::{ControlMesh, Model};

pub use discounted::{solve_discounted, DiscountedSolution};
pub use ergodic::{solve_ergodic, ErgodicSolution};
pub use finite::{solve_finite_horizon, solve_finite_horizon_on, FiniteHorizonSolution};
pub use kruzkov::{solve_kruzkov, KruzkovSolution};
pub use limits::{limit_discounted, limit_finite_horizon, LimitSolution};

/// How finite-horizon marching measures time for extended problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HorizonMode {
    /// Physical time: a step with control `c` consumes `dt * theta(c)` of
    /// the horizon.
    Physical,
    /// Extended time `s` with the time constraint dropped: computes
    /// `W(s, x)`.
    Extended,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverConfig {
    /// Scheme time step `dt`.
    pub step: f64,
    /// Target accuracy of fixed points and of limits (sup norm).
    pub tolerance: f64,
    /// Iteration budget (sweeps, or time levels for marching).
    pub max_iterations: usize,
    /// Values above this are candidates for the infinite state.
    pub infinity_threshold: f64,
    /// Minimal growth per unit of the limit parameter for a node above the
    /// threshold to be declared infinite.
    pub growth_slope: f64,
    pub horizon_mode: HorizonMode,
    /// Largest admissible oscillation of `delta V_delta` in the ergodic solver.
    pub flatness_tolerance: f64,
    /// Record wall time in reports (off by default so outputs are
    /// reproducible byte for byte).
    pub record_timing: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            step: 0.05,
            tolerance: 1e-6,
            max_iterations: 200_000,
            infinity_threshold: 1e4,
            growth_slope: 1e-3,
            horizon_mode: HorizonMode::Physical,
            flatness_tolerance: 0.05,
            record_timing: false,
        }
    }
}

impl SolverConfig {
    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_max_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }

    pub fn with_horizon_mode(mut self, mode: HorizonMode) -> Self {
        self.horizon_mode = mode;
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !(self.tolerance > 0.0) || self.max_iterations == 0 {
            return Err(Error::Config(
                "step and tolerance must be positive and max_iterations nonzero".into(),
            ));
        }
        if !(self.infinity_threshold > 0.0) || !(self.growth_slope >= 0.0) {
            return Err(Error::Config(
                "invalid infinity detection parameters".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Converged,
    BudgetExhausted,
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub param: f64,
    pub sup_change: f64,
    pub residual: f64,
    pub seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub records: Vec<Record>,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl ConvergenceReport {
    pub(crate) fn new(warnings: Vec<String>) -> Self {
        ConvergenceReport {
            records: Vec::new(),
            verdict: Verdict::Converged,
            warnings,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Measures elapsed time only when timing is requested.
pub(crate) struct Clock(Option<Instant>);

impl Clock {
    pub(crate) fn start(config: &SolverConfig) -> Self {
        Clock(config.record_timing.then(Instant::now))
    }

    pub(crate) fn seconds(&self) -> Option<f64> {
        self.0.map(|t| t.elapsed().as_secs_f64())
    }
}

/// Precomputed one-step transitions of a model on a grid.
#[derive(Debug, Clone)]
pub struct Scheme {
    pub grid: Grid,
    pub step: f64,
    controls: usize,
    /// `dt * L(x_k, c)` at `k * controls + c`.
    cost: Vec<f64>,
    /// `theta(c)` at `k * controls + c`.
    rate: Vec<f64>,
    offsets: Vec<u32>,
    stencil_nodes: Vec<u32>,
    stencil_weights: Vec<f64>,
    clamped: Vec<bool>,
    pub warnings: Vec<String>,
}

/// One transition as computed per node before flattening into [`Scheme`].
struct Transition {
    cost: f64,
    rate: f64,
    nodes: Vec<u32>,
    weights: Vec<f64>,
    clamped: bool,
    speed: f64,
}

/// Nodes at or above this count are swept in parallel.
const PARALLEL_MIN_NODES: usize = 512;

impl Scheme {
    pub fn new(model: &Model, mesh: &ControlMesh, grid: &Grid, step: f64) -> Result<Self> {
        if !(step > 0.0) {
            return Err(Error::Config(format!(
                "time step must be positive, got {step}"
            )));
        }
        if grid.dim() != model.state_dim() {
            return Err(Error::Config(format!(
                "grid has dimension {}, problem has {}",
                grid.dim(),
                model.state_dim()
            )));
        }
        mesh.validate(model)?;
        let controls = mesh.len();
        let per_node: Vec<Vec<Transition>> = (0..grid.len())
            .into_par_iter()
            .map(|k| {
                let x = grid.node(k);
                mesh.points
                    .iter()
                    .map(|c| {
                        let d = model.local(&x, c)?;
                        let foot: Vec<f64> = x
                            .iter()
                            .zip(&d.velocity)
                            .map(|(a, v)| a + step * v)
                            .collect();
                        let s = grid.stencil(&foot, true)?;
                        let speed = d.velocity.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                        Ok(Transition {
                            cost: step * d.cost,
                            rate: d.time_rate,
                            nodes: s.nodes.iter().map(|&n| n as u32).collect(),
                            weights: s.weights,
                            clamped: s.clamped,
                            speed,
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let transitions = grid.len() * controls;
        let mut scheme = Scheme {
            grid: grid.clone(),
            step,
            controls,
            cost: Vec::with_capacity(transitions),
            rate: Vec::with_capacity(transitions),
            offsets: Vec::with_capacity(transitions + 1),
            stencil_nodes: Vec::new(),
            stencil_weights: Vec::new(),
            clamped: Vec::with_capacity(transitions),
            warnings: Vec::new(),
        };
        scheme.offsets.push(0);
        let mut max_speed = 0.0f64;
        for node in per_node {
            for t in node {
                scheme.cost.push(t.cost);
                scheme.rate.push(t.rate);
                scheme.stencil_nodes.extend(t.nodes);
                scheme.stencil_weights.extend(t.weights);
                scheme.offsets.push(scheme.stencil_nodes.len() as u32);
                scheme.clamped.push(t.clamped);
                max_speed = max_speed.max(t.speed);
            }
        }
        if step * max_speed > grid.min_spacing() * (1.0 + 1e-12) {
            scheme.warnings.push(format!(
                "CFL: dt * max|F| = {:.4e} exceeds the smallest grid spacing {:.4e}",
                step * max_speed,
                grid.min_spacing()
            ));
        }
        let clamped = scheme.clamped.iter().filter(|&&c| c).count();
        if clamped > 0 {
            scheme.warnings.push(format!(
                "boundary: {clamped} of {transitions} transitions leave the grid and are clamped"
            ));
        }
        Ok(scheme)
    }

    pub fn nodes(&self) -> usize {
        self.grid.len()
    }

    pub fn controls(&self) -> usize {
        self.controls
    }

    /// Number of transitions whose foot left the grid.
    pub fn clamped_transitions(&self) -> usize {
        self.clamped.iter().filter(|&&c| c).count()
    }

    #[inline]
    fn interp(&self, t: usize, u: &[f64]) -> f64 {
        let (a, b) = (self.offsets[t] as usize, self.offsets[t + 1] as usize);
        let mut acc = 0.0;
        for j in a..b {
            acc += self.stencil_weights[j] * u[self.stencil_nodes[j] as usize];
        }
        acc
    }

    /// Writes `out[k] = f(k)` for every node, in parallel on large grids.
    fn sweep(&self, out: &mut [f64], f: impl Fn(usize) -> f64 + Sync) {
        if out.len() >= PARALLEL_MIN_NODES {
            out.par_iter_mut()
                .with_min_len(128)
                .enumerate()
                .for_each(|(k, o)| *o = f(k));
        } else {
            for (k, o) in out.iter_mut().enumerate() {
                *o = f(k);
            }
        }
    }

    /// `min_c g(c)` over the controls of node `k`.
    #[inline]
    fn min_over_controls(&self, k: usize, g: impl Fn(usize) -> f64) -> f64 {
        let base = k * self.controls;
        let mut best = f64::INFINITY;
        for t in base..base + self.controls {
            let v = g(t);
            if v < best {
                best = v;
            }
        }
        best
    }

    /// One undiscounted step in scheme time:
    /// `(T u)(x) = min_c [dt L(x, c) + u(x + dt F(x, c))]`.
    pub fn apply_stationary(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        self.apply_stationary_into(u, &mut out);
        out
    }

    pub(crate) fn apply_stationary_into(&self, u: &[f64], out: &mut [f64]) {
        self.sweep(out, |k| {
            self.min_over_controls(k, |t| self.cost[t] + self.interp(t, u))
        });
    }

    /// Discounted step `min_c [dt L + exp(-delta dt theta) u(foot)]`.
    pub fn apply_discounted(&self, u: &[f64], delta: f64) -> Vec<f64> {
        let factors = self.discount_factors(delta);
        let mut out = vec![0.0; u.len()];
        self.apply_discounted_into(u, &factors, &mut out);
        out
    }

    pub(crate) fn discount_factors(&self, delta: f64) -> Vec<f64> {
        self.rate
            .iter()
            .map(|r| (-delta * self.step * r).exp())
            .collect()
    }

    pub(crate) fn apply_discounted_into(&self, u: &[f64], factors: &[f64], out: &mut [f64]) {
        self.sweep(out, |k| {
            self.min_over_controls(k, |t| self.cost[t] + factors[t] * self.interp(t, u))
        });
    }

    /// Kruzkov step `min_c [(1 - e^{-dt L}) + e^{-dt L} U(foot)]`, with
    /// `U = 0` on `pinned` nodes.
    pub fn apply_kruzkov(&self, u: &[f64], pinned: &[bool]) -> Vec<f64> {
        let factors: Vec<f64> = self.cost.iter().map(|c| (-c).exp()).collect();
        let mut out = vec![0.0; u.len()];
        self.apply_kruzkov_into(u, &factors, pinned, &mut out);
        out
    }

    pub(crate) fn kruzkov_factors(&self) -> Vec<f64> {
        self.cost.iter().map(|c| (-c).exp()).collect()
    }

    pub(crate) fn apply_kruzkov_into(
        &self,
        u: &[f64],
        factors: &[f64],
        pinned: &[bool],
        out: &mut [f64],
    ) {
        self.sweep(out, |k| {
            if pinned[k] {
                0.0
            } else {
                // Exactly at most 1; the clamp removes rounding above it.
                self.min_over_controls(k, |t| (1.0 - factors[t]) + factors[t] * self.interp(t, u))
                    .min(1.0)
            }
        });
    }

    /// Physical-time level update
    /// `min_c [dt L + theta V_prev(foot) + (1 - theta) V_cur(foot)]`.
    pub(crate) fn apply_level_into(&self, prev: &[f64], cur: &[f64], out: &mut [f64]) {
        self.sweep(out, |k| {
            self.min_over_controls(k, |t| {
                let th = self.rate[t];
                let mut v = self.cost[t];
                if th > 0.0 {
                    v += th * self.interp(t, prev);
                }
                if th < 1.0 {
                    v += (1.0 - th) * self.interp(t, cur);
                }
                v
            })
        });
    }

    /// Whether every control has `theta = 1` (compact problems).
    pub(crate) fn unit_rates(&self) -> bool {
        self.rate.iter().all(|&r| r == 1.0)
    }

    /// Index of a minimizing control at node `k` for the undiscounted step;
    /// ties go to the first mesh index.
    pub fn argmin_stationary(&self, k: usize, u: &[f64]) -> usize {
        let base = k * self.controls;
        let mut best = (f64::INFINITY, 0);
        for c in 0..self.controls {
            let v = self.cost[base + c] + self.interp(base + c, u);
            if v < best.0 {
                best = (v, c);
            }
        }
        best.1
    }

    /// Nodes from which no sequence of `steps` transitions touches a
    /// clamped foot.
    pub fn boundary_free(&self, steps: usize) -> Vec<bool> {
        let mut free = vec![true; self.nodes()];
        for _ in 0..steps {
            let prev = free.clone();
            for (k, f) in free.iter_mut().enumerate() {
                let base = k * self.controls;
                *f = (base..base + self.controls).all(|t| {
                    !self.clamped[t]
                        && (self.offsets[t] as usize..self.offsets[t + 1] as usize)
                            .all(|j| prev[self.stencil_nodes[j] as usize])
                });
            }
        }
        free
    }
}

/// `max |a - b|` over entries finite in both, optionally skipping nodes.
pub(crate) fn sup_change(a: &[f64], b: &[f64], skip: Option<&[bool]>) -> f64 {
    let mut m = 0.0f64;
    for k in 0..a.len() {
        if skip.is_some_and(|s| s[k]) {
            continue;
        }
        if a[k].is_finite() && b[k].is_finite() {
            m = m.max((a[k] - b[k]).abs());
        }
    }
    m
}

/// Stationary residual `sup |u - T u|` over nodes where `u` is finite.
pub fn stationary_residual(scheme: &Scheme, u: &ValueField) -> f64 {
    stationary_residual_values(scheme, &u.values)
}

pub(crate) fn stationary_residual_values(scheme: &Scheme, u: &[f64]) -> f64 {
    let tu = scheme.apply_stationary(u);
    sup_change(u, &tu, None)
}
