//! Sampled checks of restraint-function, stability and cost lower-bound
//! conditions.
//!
//! Sampling proves nothing: these checks look for counterexamples over a
//! deterministic low-discrepancy sample and report the worst margin found.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{Value, ValueField};
use crate::hamiltonians::{ControlMesh, Model};
use crate::problem::{cone_samples, sphere_directions, ControlProblem, ControlSet, StateScalar, TargetSet};
use crate::sampling::halton_box;

pub type Gradient = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
/// Nondecreasing `r -> rate(r)` on `r >= 0`.
pub type RateFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Maximum number of violating points kept in a report.
const MAX_WITNESSES: usize = 32;
/// `|U|` allowed on target boundary points by the definiteness probe.
const TARGET_TOLERANCE: f64 = 1e-9;

/// A continuously differentiable candidate `U` with its gradient.
#[derive(Clone)]
pub struct Certificate {
    pub value: StateScalar,
    pub gradient: Gradient,
}

impl Certificate {
    pub fn new(
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Certificate {
            value: Arc::new(value),
            gradient: Arc::new(gradient),
        }
    }
}

/// Sampling region and density.
#[derive(Debug, Clone, PartialEq)]
pub struct Sampling {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub count: usize,
    pub seed: u64,
}

impl Sampling {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, count: usize) -> Self {
        Sampling {
            lo,
            hi,
            count,
            seed: 0,
        }
    }

    fn points(&self, dim: usize) -> Result<Vec<Vec<f64>>> {
        if self.lo.len() != dim || self.hi.len() != dim {
            return Err(Error::Config(format!(
                "sampling region must have dimension {dim}"
            )));
        }
        if self.lo.iter().zip(&self.hi).any(|(a, b)| !(a <= b)) {
            return Err(Error::Config("sampling region needs lo <= hi".into()));
        }
        Ok(halton_box(&self.lo, &self.hi, self.count, self.seed))
    }
}

/// Which side of zero a margin must fall on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Requirement {
    #[serde(rename = "< 0")]
    Negative,
    #[serde(rename = "<= 0")]
    NonPositive,
    #[serde(rename = ">= 0")]
    NonNegative,
}

impl Requirement {
    fn holds(self, m: f64) -> bool {
        match self {
            Requirement::Negative => m < 0.0,
            Requirement::NonPositive => m <= 0.0,
            Requirement::NonNegative => m >= 0.0,
        }
    }

    /// True when `a` is closer to violating than `b`.
    fn worse(self, a: f64, b: f64) -> bool {
        match self {
            Requirement::Negative | Requirement::NonPositive => a > b,
            Requirement::NonNegative => a < b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginReport {
    /// Margin closest to violating the requirement.
    pub worst_margin: f64,
    /// Sample attaining the worst margin.
    pub argmin_point: Vec<f64>,
    /// Samples evaluated (those outside the target).
    pub samples: usize,
    pub pass: bool,
    pub requirement: Requirement,
    /// Up to 32 samples where the requirement fails, in sampling order.
    pub violations: Vec<Vec<f64>>,
    pub violation_count: usize,
}

impl MarginReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    fn collect(points: Vec<Vec<f64>>, margins: Vec<f64>, requirement: Requirement) -> Self {
        let mut worst = None::<usize>;
        let mut violations = Vec::new();
        let mut violation_count = 0;
        for (i, &m) in margins.iter().enumerate() {
            if worst.is_none_or(|w| requirement.worse(m, margins[w])) {
                worst = Some(i);
            }
            if !requirement.holds(m) {
                violation_count += 1;
                if violations.len() < MAX_WITNESSES {
                    violations.push(points[i].clone());
                }
            }
        }
        MarginReport {
            worst_margin: worst.map_or(f64::NAN, |w| margins[w]),
            argmin_point: worst.map(|w| points[w].clone()).unwrap_or_default(),
            samples: margins.len(),
            pass: worst.is_some() && violation_count == 0,
            requirement,
            violations,
            violation_count,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn off_target(sampling: &Sampling, dim: usize, target: &TargetSet) -> Result<Vec<Vec<f64>>> {
    Ok(sampling
        .points(dim)?
        .into_iter()
        .filter(|x| !target.contains(x))
        .collect())
}

/// `U > 0` on the samples and `U = 0` on the target's boundary points.
fn definiteness_probe(cert: &Certificate, target: &TargetSet, points: &[Vec<f64>]) -> Result<()> {
    for b in &target.boundary_points {
        let u = (cert.value)(b);
        if !(u.abs() <= TARGET_TOLERANCE) {
            return Err(Error::Precondition(format!(
                "U = {u} on the target point {b:?}, expected 0"
            )));
        }
    }
    for x in points {
        let u = (cert.value)(x);
        if !(u > 0.0) {
            return Err(Error::Precondition(format!(
                "U = {u} at {x:?} off the target, expected > 0"
            )));
        }
    }
    Ok(())
}

fn checked_gradient(cert: &Certificate, x: &[f64]) -> Result<Vec<f64>> {
    let g = (cert.gradient)(x);
    if g.len() != x.len() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::Evaluation {
            x: x.to_vec(),
            control: Vec::new(),
            detail: format!(
                "certificate gradient {g:?} is not a finite vector of length {}",
                x.len()
            ),
        });
    }
    Ok(g)
}

/// Control points used by the ordinary-control checks: the lattice of a
/// box (21 per axis), the points of a finite set, and for cones a radial
/// mesh of `A ∩ B(0, radius)`. The cone mesh adds geometric radii
/// `radius 2^-k` so that the small optimal controls near the target are
/// resolved.
pub fn default_controls(set: &ControlSet, radius: f64) -> Result<Vec<Vec<f64>>> {
    match set {
        ControlSet::CompactBox { bounds } => {
            let mesh = ControlMesh::lattice(bounds, 21)?;
            Ok(mesh
                .points
                .into_iter()
                .filter_map(|c| match c {
                    crate::hamiltonians::ControlPoint::Ordinary(a) => Some(a),
                    crate::hamiltonians::ControlPoint::Extended(_) => None,
                })
                .collect())
        }
        ControlSet::CompactFinite { points } => Ok(points.clone()),
        ControlSet::Cone { .. } => {
            let mut out = cone_samples(set, radius, 32);
            for d in sphere_directions(set, 16) {
                for k in 6..=30 {
                    let r = radius * 2f64.powi(-k);
                    out.push(d.iter().map(|v| v * r).collect());
                }
            }
            Ok(out)
        }
    }
}

/// Restraint-function check: at each sample `x` off the target,
/// `min_a <DU(x), f(x, a)> + k l(x, a)` over the controls (truncated to
/// `|a| <= R(U(x))` when a radius map is given) must be negative.
#[allow(clippy::too_many_arguments)]
pub fn check_mrf(
    problem: &ControlProblem,
    cert: &Certificate,
    target: &TargetSet,
    k: f64,
    sampling: &Sampling,
    controls: &[Vec<f64>],
    radius: Option<&RateFn>,
) -> Result<MarginReport> {
    if !(k > 0.0) {
        return Err(Error::Domain(format!("k must be positive, got {k}")));
    }
    mrf_margins(problem, cert, target, k, sampling, controls, radius)
}

/// [`check_mrf`] with `k = 0`: a pure decrease condition.
pub fn check_decrease(
    problem: &ControlProblem,
    cert: &Certificate,
    target: &TargetSet,
    sampling: &Sampling,
    controls: &[Vec<f64>],
) -> Result<MarginReport> {
    mrf_margins(problem, cert, target, 0.0, sampling, controls, None)
}

fn mrf_margins(
    problem: &ControlProblem,
    cert: &Certificate,
    target: &TargetSet,
    k: f64,
    sampling: &Sampling,
    controls: &[Vec<f64>],
    radius: Option<&RateFn>,
) -> Result<MarginReport> {
    if controls.is_empty() {
        return Err(Error::Config("control mesh is empty".into()));
    }
    let points = off_target(sampling, problem.state_dim, target)?;
    definiteness_probe(cert, target, &points)?;
    let margins = points
        .par_iter()
        .map(|x| {
            let p = checked_gradient(cert, x)?;
            let limit = radius.map(|r| r((cert.value)(x)));
            let mut best = f64::INFINITY;
            for a in controls {
                if limit.is_some_and(|r| a.iter().map(|v| v * v).sum::<f64>().sqrt() > r) {
                    continue;
                }
                let f = problem.eval_dynamics(x, a)?;
                let l = if k == 0.0 {
                    0.0
                } else {
                    problem.eval_lagrangian(x, a)?
                };
                best = best.min(dot(&p, &f) + k * l);
            }
            Ok(best)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(MarginReport::collect(
        points,
        margins,
        Requirement::Negative,
    ))
}

/// Stability-type check on the compactified problem: at each sample off
/// the target, `max_c <DU(x), F(x, c)> + m(d(x))` over the mesh must be
/// nonpositive.
pub fn check_sc1(
    model: &Model,
    mesh: &ControlMesh,
    cert: &Certificate,
    target: &TargetSet,
    m: &RateFn,
    sampling: &Sampling,
) -> Result<MarginReport> {
    mesh.validate(model)?;
    let points = off_target(sampling, model.state_dim(), target)?;
    definiteness_probe(cert, target, &points)?;
    let margins = points
        .par_iter()
        .map(|x| {
            let p = checked_gradient(cert, x)?;
            let mut best = f64::NEG_INFINITY;
            for c in &mesh.points {
                best = best.max(dot(&p, &model.local(x, c)?.velocity));
            }
            Ok(best + m(target.distance(x)))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(MarginReport::collect(
        points,
        margins,
        Requirement::NonPositive,
    ))
}

/// Cost lower bound: at each sample off the target,
/// `min_a l(x, a) - c1(d(x))` over the controls must be nonnegative.
pub fn check_sc2(
    problem: &ControlProblem,
    target: &TargetSet,
    c1: &RateFn,
    sampling: &Sampling,
    controls: &[Vec<f64>],
) -> Result<MarginReport> {
    if controls.is_empty() {
        return Err(Error::Config("control mesh is empty".into()));
    }
    let points = off_target(sampling, problem.state_dim, target)?;
    let margins = points
        .par_iter()
        .map(|x| {
            let mut best = f64::INFINITY;
            for a in controls {
                best = best.min(problem.eval_lagrangian(x, a)?);
            }
            Ok(best - c1(target.distance(x)))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(MarginReport::collect(
        points,
        margins,
        Requirement::NonNegative,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub start: Vec<f64>,
    /// Solved value at the start (`None` when infinite).
    pub start_value: Option<f64>,
    /// Running minimum of the target distance along the feedback path.
    pub min_distance: f64,
    pub final_distance: f64,
    pub final_state: Vec<f64>,
    /// Scheme time at which the minimum distance was first attained.
    pub time_of_min: f64,
    pub steps: usize,
    /// Running cost accumulated along the path.
    pub cost: f64,
    pub reached: bool,
}

/// Follows the feedback synthesized from a solved field: at each step the
/// mesh control minimizing `dt L(x, c) + V(x + dt F(x, c))` is applied for
/// one explicit step of size `dt`. Reports whether the target distance
/// falls to `tolerance` within `budget` steps.
///
/// For extended models `dt` is a step in the reparametrized time.
#[allow(clippy::too_many_arguments)]
pub fn probe_h3(
    model: &Model,
    mesh: &ControlMesh,
    field: Option<&ValueField>,
    x: &[f64],
    target: &TargetSet,
    dt: f64,
    budget: usize,
    tolerance: f64,
) -> Result<ProbeReport> {
    let field = field.ok_or_else(|| {
        Error::Precondition("feedback synthesis needs a solved value field".into())
    })?;
    if !(dt > 0.0) {
        return Err(Error::Config(format!(
            "probe step must be positive, got {dt}"
        )));
    }
    if x.len() != model.state_dim() || field.grid.dim() != x.len() {
        return Err(Error::Config("probe start has the wrong dimension".into()));
    }
    mesh.validate(model)?;
    let value_at = |y: &[f64]| -> Result<f64> {
        let s = field.grid.stencil(y, true)?;
        Ok(s.nodes
            .iter()
            .zip(&s.weights)
            .map(|(&n, &w)| w * field.values[n])
            .sum())
    };
    let start_value = match Value::from_f64(value_at(x)?) {
        Value::Finite(v) => Some(v),
        Value::Infinite => None,
    };
    let mut state = x.to_vec();
    let mut min_distance = target.distance(&state);
    let mut time_of_min = 0.0;
    let mut cost = 0.0;
    let mut steps = 0;
    while steps < budget && min_distance > tolerance {
        let mut best: Option<(f64, Vec<f64>, f64)> = None;
        for c in &mesh.points {
            let d = model.local(&state, c)?;
            let next: Vec<f64> = state
                .iter()
                .zip(&d.velocity)
                .map(|(s, v)| s + dt * v)
                .collect();
            let score = dt * d.cost + value_at(&next)?;
            if best.as_ref().is_none_or(|b| score < b.0) {
                best = Some((score, next, dt * d.cost));
            }
        }
        let (_, next, running) = best.expect("mesh is nonempty");
        state = next;
        cost += running;
        steps += 1;
        let d = target.distance(&state);
        if d < min_distance {
            min_distance = d;
            time_of_min = steps as f64 * dt;
        }
    }
    Ok(ProbeReport {
        start: x.to_vec(),
        start_value,
        min_distance,
        final_distance: target.distance(&state),
        final_state: state,
        time_of_min,
        steps,
        cost,
        reached: min_distance <= tolerance,
    })
}
