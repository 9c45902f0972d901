//! Control problems `y' = f(y, a)`, `J = int l(y, a)` with `l >= 0`.

pub mod builtins;
pub mod expr;
pub mod spec_file;

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sampling::halton_box;

pub use builtins::{builtin, builtin_with, BUILTIN_NAMES};

pub type VectorFn = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
pub type StatePredicate = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;
pub type StateScalar = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type ControlPredicate = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// Membership slack used for boxes, finite sets and cone predicates.
const MEMBERSHIP_TOL: f64 = 1e-12;

/// Closed convex cone containing the origin.
#[derive(Clone)]
pub enum ConeGenerator {
    /// All of `R^m`.
    Full,
    /// `R_+^m`.
    NonnegativeOrthant,
    /// User predicate; must describe a closed convex cone.
    Predicate(ControlPredicate),
}

impl fmt::Debug for ConeGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConeGenerator::Full => write!(f, "Full"),
            ConeGenerator::NonnegativeOrthant => write!(f, "NonnegativeOrthant"),
            ConeGenerator::Predicate(_) => write!(f, "Predicate(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub enum ControlSet {
    /// Product of closed intervals.
    CompactBox { bounds: Vec<(f64, f64)> },
    /// Finitely many points.
    CompactFinite { points: Vec<Vec<f64>> },
    /// Unbounded closed convex cone.
    Cone {
        dim: usize,
        generator: ConeGenerator,
    },
}

impl ControlSet {
    pub fn full_cone(dim: usize) -> Self {
        ControlSet::Cone {
            dim,
            generator: ConeGenerator::Full,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ControlSet::CompactBox { bounds } => bounds.len(),
            ControlSet::CompactFinite { points } => points.first().map_or(0, Vec::len),
            ControlSet::Cone { dim, .. } => *dim,
        }
    }

    pub fn is_compact(&self) -> bool {
        !matches!(self, ControlSet::Cone { .. })
    }

    pub fn contains(&self, a: &[f64]) -> bool {
        if a.len() != self.dim() || a.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match self {
            ControlSet::CompactBox { bounds } => bounds
                .iter()
                .zip(a)
                .all(|(&(lo, hi), &v)| v >= lo - MEMBERSHIP_TOL && v <= hi + MEMBERSHIP_TOL),
            ControlSet::CompactFinite { points } => points.iter().any(|p| {
                p.iter()
                    .zip(a)
                    .all(|(x, y)| (x - y).abs() <= MEMBERSHIP_TOL * (1.0 + x.abs()))
            }),
            ControlSet::Cone { generator, .. } => match generator {
                ConeGenerator::Full => true,
                ConeGenerator::NonnegativeOrthant => a.iter().all(|&v| v >= -MEMBERSHIP_TOL),
                ConeGenerator::Predicate(p) => p(a),
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() == 0 {
            return Err(Error::Config("control set has dimension 0".into()));
        }
        match self {
            ControlSet::CompactBox { bounds } => {
                for (i, &(lo, hi)) in bounds.iter().enumerate() {
                    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                        return Err(Error::Config(format!(
                            "control box axis {i}: invalid interval [{lo}, {hi}]"
                        )));
                    }
                }
            }
            ControlSet::CompactFinite { points } => {
                let m = self.dim();
                if points
                    .iter()
                    .any(|p| p.len() != m || p.iter().any(|v| !v.is_finite()))
                {
                    return Err(Error::Config(
                        "finite control set: points must be finite and share one dimension".into(),
                    ));
                }
            }
            ControlSet::Cone { dim, .. } => {
                if !self.contains(&vec![0.0; *dim]) {
                    return Err(Error::Config("cone does not contain the origin".into()));
                }
            }
        }
        Ok(())
    }
}

/// Declared modulus of continuity of `l` in `x`; metadata only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulusDescriptor {
    pub family: String,
    pub constants: Vec<f64>,
}

impl Default for ModulusDescriptor {
    fn default() -> Self {
        ModulusDescriptor {
            family: "lipschitz".into(),
            constants: Vec::new(),
        }
    }
}

/// Growth exponents and constants. Only `p`, `q` enter computations; the
/// remaining constants are declared metadata consumed by report-style checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthData {
    pub p: u32,
    pub q: u32,
    /// Global growth constant `M`.
    pub m: f64,
    /// Coercivity constants in `l(x, a) >= c2 |a|^q - c1`.
    pub c1: f64,
    pub c2: f64,
    pub modulus: ModulusDescriptor,
}

impl GrowthData {
    pub fn new(p: u32, q: u32, m: f64, c1: f64, c2: f64) -> Self {
        GrowthData {
            p,
            q,
            m,
            c1,
            c2,
            modulus: ModulusDescriptor::default(),
        }
    }

    pub fn validate(&self, cone: bool) -> Result<()> {
        if self.p < 1 || self.q < self.p {
            return Err(Error::Config(format!(
                "growth exponents must satisfy q >= p >= 1 (p = {}, q = {})",
                self.p, self.q
            )));
        }
        if !(self.m > 0.0) || !(self.c1 >= 0.0) || !self.c2.is_finite() || self.c2 < 0.0 {
            return Err(Error::Config(format!(
                "growth constants out of range (M = {}, C1 = {}, C2 = {})",
                self.m, self.c1, self.c2
            )));
        }
        if cone && !(self.c2 > 0.0) {
            return Err(Error::Config(
                "coercivity constant C2 must be positive for a cone control set".into(),
            ));
        }
        Ok(())
    }
}

/// Closed target set with compact boundary, described by membership and
/// Euclidean distance.
#[derive(Clone)]
pub struct TargetSet {
    pub label: String,
    pub membership: StatePredicate,
    pub distance: StateScalar,
    pub bounding_radius: f64,
    /// A few points of the boundary, used for positive-definiteness probes.
    pub boundary_points: Vec<Vec<f64>>,
}

impl fmt::Debug for TargetSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TargetSet")
            .field("label", &self.label)
            .field("bounding_radius", &self.bounding_radius)
            .finish()
    }
}

impl TargetSet {
    pub fn point(center: Vec<f64>) -> Self {
        Self::ball(center, 0.0)
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Self {
        let label = format!("ball(center = {center:?}, radius = {radius})");
        let bounding_radius = center.iter().map(|c| c * c).sum::<f64>().sqrt() + radius;
        let mut boundary_points = Vec::new();
        if radius == 0.0 {
            boundary_points.push(center.clone());
        } else {
            for i in 0..center.len() {
                for sign in [-1.0, 1.0] {
                    let mut p = center.clone();
                    p[i] += sign * radius;
                    boundary_points.push(p);
                }
            }
        }
        let c1 = center.clone();
        let c2 = center;
        let dist = move |x: &[f64]| -> f64 {
            let r: f64 = x
                .iter()
                .zip(&c1)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            (r - radius).max(0.0)
        };
        let member = move |x: &[f64]| -> bool {
            let r2: f64 = x.iter().zip(&c2).map(|(a, b)| (a - b) * (a - b)).sum();
            r2 <= radius * radius
        };
        TargetSet {
            label,
            membership: Arc::new(member),
            distance: Arc::new(dist),
            bounding_radius,
            boundary_points,
        }
    }

    /// Axis-aligned closed box `[lo, hi]`.
    pub fn cuboid(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        let label = format!("box({lo:?}, {hi:?})");
        let bounding_radius = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| a.abs().max(b.abs()).powi(2))
            .sum::<f64>()
            .sqrt();
        let boundary_points = vec![lo.clone(), hi.clone()];
        let (l1, h1) = (lo.clone(), hi.clone());
        let dist = move |x: &[f64]| -> f64 {
            x.iter()
                .zip(l1.iter().zip(&h1))
                .map(|(&v, (&a, &b))| {
                    let d = (a - v).max(v - b).max(0.0);
                    d * d
                })
                .sum::<f64>()
                .sqrt()
        };
        let member = move |x: &[f64]| -> bool {
            x.iter()
                .zip(lo.iter().zip(&hi))
                .all(|(&v, (&a, &b))| v >= a && v <= b)
        };
        TargetSet {
            label,
            membership: Arc::new(member),
            distance: Arc::new(dist),
            bounding_radius,
            boundary_points,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        (self.membership)(x)
    }

    pub fn distance(&self, x: &[f64]) -> f64 {
        (self.distance)(x)
    }

    /// Checks `d = 0 <=> member` and 1-Lipschitz continuity of `d` on the
    /// given sample points. Returns the first violated pair, if any.
    pub fn check_consistency(&self, samples: &[Vec<f64>], tol: f64) -> Option<String> {
        for x in samples {
            let d = self.distance(x);
            if d < 0.0 || (d == 0.0) != self.contains(x) {
                return Some(format!(
                    "distance {d} inconsistent with membership at {x:?}"
                ));
            }
        }
        for pair in samples.windows(2) {
            let (x, y) = (&pair[0], &pair[1]);
            let gap: f64 = x
                .iter()
                .zip(y)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if (self.distance(x) - self.distance(y)).abs() > gap + tol {
                return Some(format!(
                    "distance is not 1-Lipschitz between {x:?} and {y:?}"
                ));
            }
        }
        None
    }
}

/// Periodicity and controllability constants for torus problems.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErgodicData {
    pub periods: Vec<f64>,
    /// `C` and `gamma` in "every z is reachable from x within extended time
    /// `C |x - z|^gamma`".
    pub controllability_c: f64,
    pub controllability_gamma: f64,
}

impl ErgodicData {
    /// Declared bound `M C (sqrt(n) max T_i)^gamma` on the corrector.
    pub fn corrector_bound(&self, m: f64) -> f64 {
        let n = self.periods.len() as f64;
        let t_max = self.periods.iter().cloned().fold(0.0, f64::max);
        m * self.controllability_c * (n.sqrt() * t_max).powf(self.controllability_gamma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Dynamics,
    Lagrangian,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RecessionValue {
    Dynamics(Vec<f64>),
    Lagrangian(f64),
}

/// A control problem. Cheap to clone; evaluators are shared and pure.
#[derive(Clone)]
pub struct ControlProblem {
    pub name: String,
    pub state_dim: usize,
    pub control_set: ControlSet,
    pub growth: GrowthData,
    pub dynamics: VectorFn,
    pub lagrangian: ScalarFn,
    pub dynamics_recession: Option<VectorFn>,
    pub lagrangian_recession: Option<ScalarFn>,
    pub target: Option<TargetSet>,
    pub ergodic: Option<ErgodicData>,
}

impl fmt::Debug for ControlProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ControlProblem")
            .field("name", &self.name)
            .field("state_dim", &self.state_dim)
            .field("control_set", &self.control_set)
            .field("growth", &self.growth)
            .field("target", &self.target)
            .field("ergodic", &self.ergodic)
            .finish()
    }
}

impl ControlProblem {
    pub fn new(
        name: impl Into<String>,
        state_dim: usize,
        control_set: ControlSet,
        growth: GrowthData,
        dynamics: VectorFn,
        lagrangian: ScalarFn,
    ) -> Result<Self> {
        if state_dim == 0 {
            return Err(Error::Config("state dimension must be positive".into()));
        }
        control_set.validate()?;
        growth.validate(!control_set.is_compact())?;
        Ok(ControlProblem {
            name: name.into(),
            state_dim,
            control_set,
            growth,
            dynamics,
            lagrangian,
            dynamics_recession: None,
            lagrangian_recession: None,
            target: None,
            ergodic: None,
        })
    }

    pub fn with_recessions(
        mut self,
        dynamics: Option<VectorFn>,
        lagrangian: Option<ScalarFn>,
    ) -> Self {
        self.dynamics_recession = dynamics;
        self.lagrangian_recession = lagrangian;
        self
    }

    pub fn with_target(mut self, target: TargetSet) -> Self {
        self.target = Some(target);
        self
    }

    pub fn with_ergodic(mut self, data: ErgodicData) -> Result<Self> {
        if data.periods.len() != self.state_dim || data.periods.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::Config(format!(
                "ergodic data needs {} positive periods",
                self.state_dim
            )));
        }
        self.ergodic = Some(data);
        Ok(self)
    }

    pub fn control_dim(&self) -> usize {
        self.control_set.dim()
    }

    fn check_args(&self, x: &[f64], a: &[f64]) -> Result<()> {
        if x.len() != self.state_dim {
            return Err(Error::Domain(format!(
                "state has dimension {}, expected {}",
                x.len(),
                self.state_dim
            )));
        }
        if !self.control_set.contains(a) {
            return Err(Error::Domain(format!(
                "control {a:?} is not in the control set"
            )));
        }
        Ok(())
    }

    /// `f(x, a)`, membership-checked.
    pub fn eval_dynamics(&self, x: &[f64], a: &[f64]) -> Result<Vec<f64>> {
        self.check_args(x, a)?;
        self.dynamics_unchecked(x, a)
    }

    /// `f(x, a)` without the membership check (used on scaled controls of
    /// the extended problem, which are cone members by construction).
    pub(crate) fn dynamics_unchecked(&self, x: &[f64], a: &[f64]) -> Result<Vec<f64>> {
        let v = (self.dynamics)(x, a);
        if v.len() != self.state_dim {
            return Err(Error::Config(format!(
                "dynamics returned {} components, expected {}",
                v.len(),
                self.state_dim
            )));
        }
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::Evaluation {
                x: x.to_vec(),
                control: a.to_vec(),
                detail: "dynamics is not finite".into(),
            });
        }
        Ok(v)
    }

    /// `l(x, a) >= 0`, membership-checked.
    pub fn eval_lagrangian(&self, x: &[f64], a: &[f64]) -> Result<f64> {
        self.check_args(x, a)?;
        self.lagrangian_unchecked(x, a)
    }

    pub(crate) fn lagrangian_unchecked(&self, x: &[f64], a: &[f64]) -> Result<f64> {
        let v = (self.lagrangian)(x, a);
        if !v.is_finite() {
            return Err(Error::Evaluation {
                x: x.to_vec(),
                control: a.to_vec(),
                detail: "lagrangian is not finite".into(),
            });
        }
        if v < 0.0 {
            return Err(Error::ModelViolation(format!(
                "negative running cost l = {v} at x = {x:?}, a = {a:?}"
            )));
        }
        Ok(v)
    }

    /// Recession function `lim_{rho -> 0+} rho^q Phi(x, a / rho)`.
    ///
    /// User-supplied recessions are returned as-is. Otherwise, for `q > p`
    /// the dynamics recession is zero and everything else is extrapolated
    /// numerically (see [`numerical_recession`]).
    pub fn recession(&self, which: Which, x: &[f64], a: &[f64]) -> Result<RecessionValue> {
        match which {
            Which::Dynamics => self
                .dynamics_recession_at(x, a)
                .map(RecessionValue::Dynamics),
            Which::Lagrangian => self
                .lagrangian_recession_at(x, a)
                .map(RecessionValue::Lagrangian),
        }
    }

    fn require_cone(&self, a: &[f64], x: &[f64]) -> Result<()> {
        if self.control_set.is_compact() {
            return Err(Error::Precondition(
                "recession functions are defined for cone control sets only".into(),
            ));
        }
        self.check_args(x, a)
    }

    pub fn dynamics_recession_at(&self, x: &[f64], a: &[f64]) -> Result<Vec<f64>> {
        self.require_cone(a, x)?;
        if let Some(rec) = &self.dynamics_recession {
            let v = rec(x, a);
            if v.iter().any(|c| !c.is_finite()) {
                return Err(Error::Evaluation {
                    x: x.to_vec(),
                    control: a.to_vec(),
                    detail: "dynamics recession is not finite".into(),
                });
            }
            return Ok(v);
        }
        if self.growth.q > self.growth.p {
            return Ok(vec![0.0; self.state_dim]);
        }
        let q = self.growth.q as i32;
        numerical_recession(|rho| {
            let scaled: Vec<f64> = a.iter().map(|v| v / rho).collect();
            (self.dynamics)(x, &scaled)
                .into_iter()
                .map(|v| v * rho.powi(q))
                .collect()
        })
        .map_err(|detail| Error::RecessionUndefined {
            x: x.to_vec(),
            control: a.to_vec(),
            detail,
        })
    }

    pub fn lagrangian_recession_at(&self, x: &[f64], a: &[f64]) -> Result<f64> {
        self.require_cone(a, x)?;
        if let Some(rec) = &self.lagrangian_recession {
            let v = rec(x, a);
            if !v.is_finite() {
                return Err(Error::Evaluation {
                    x: x.to_vec(),
                    control: a.to_vec(),
                    detail: "lagrangian recession is not finite".into(),
                });
            }
            return Ok(v);
        }
        let q = self.growth.q as i32;
        numerical_recession(|rho| {
            let scaled: Vec<f64> = a.iter().map(|v| v / rho).collect();
            vec![(self.lagrangian)(x, &scaled) * rho.powi(q)]
        })
        .map(|v| v[0])
        .map_err(|detail| Error::RecessionUndefined {
            x: x.to_vec(),
            control: a.to_vec(),
            detail,
        })
    }

    /// Samples `l(x, a) - C2 |a|^q + C1` over `region` times a control mesh
    /// of the cone. `budget` bounds the total number of evaluations.
    pub fn check_coercivity(
        &self,
        region: (&[f64], &[f64]),
        control_radius: f64,
        budget: usize,
    ) -> Result<CoercivityReport> {
        let ControlSet::Cone { .. } = &self.control_set else {
            return Err(Error::Precondition(
                "coercivity is checked for cone control sets".into(),
            ));
        };
        let controls = cone_samples(&self.control_set, control_radius, 8);
        let n_states = (budget / controls.len().max(1)).max(1);
        let states = halton_box(region.0, region.1, n_states, 0);
        let q = self.growth.q as i32;
        let mut report = CoercivityReport {
            min_margin: f64::INFINITY,
            witness_state: Vec::new(),
            witness_control: Vec::new(),
            samples: 0,
            pass: true,
        };
        // The box corners' centre is included so equality cases at x = 0 show up.
        let centre: Vec<f64> = region
            .0
            .iter()
            .zip(region.1)
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        for x in std::iter::once(&centre).chain(states.iter()) {
            for a in &controls {
                let norm: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
                let margin = self.lagrangian_unchecked(x, a)? - self.growth.c2 * norm.powi(q)
                    + self.growth.c1;
                report.samples += 1;
                if margin < report.min_margin {
                    report.min_margin = margin;
                    report.witness_state = x.clone();
                    report.witness_control = a.clone();
                }
            }
        }
        report.pass = report.min_margin >= -1e-12;
        Ok(report)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CoercivityReport {
    pub min_margin: f64,
    pub witness_state: Vec<f64>,
    pub witness_control: Vec<f64>,
    pub samples: usize,
    pub pass: bool,
}

/// Extrapolates `g(0+)` from `g(2^-k)`, `k = 4..=20`, with one Richardson
/// step (first-order error elimination). Converged when two consecutive
/// extrapolants agree to `1e-6` relative.
pub fn numerical_recession(g: impl Fn(f64) -> Vec<f64>) -> std::result::Result<Vec<f64>, String> {
    const REL_TOL: f64 = 1e-6;
    let seq: Vec<Vec<f64>> = (4..=20).map(|k| g(0.5f64.powi(k))).collect();
    if seq.iter().flatten().any(|v| !v.is_finite()) {
        return Err("non-finite values along the scaling sequence".into());
    }
    let rich: Vec<Vec<f64>> = seq
        .windows(2)
        .map(|w| w[1].iter().zip(&w[0]).map(|(b, a)| 2.0 * b - a).collect())
        .collect();
    let close = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .all(|(x, y)| (x - y).abs() <= REL_TOL * x.abs().max(y.abs()).max(1.0))
    };
    let n = rich.len();
    if close(&rich[n - 1], &rich[n - 2]) && close(&rich[n - 2], &rich[n - 3]) {
        Ok(rich[n - 1].clone())
    } else {
        Err(format!(
            "scaling sequence did not settle: last extrapolants {:?} and {:?}",
            rich[n - 2],
            rich[n - 1]
        ))
    }
}

/// Sample controls in `cone ∩ B(0, radius)`: a direction mesh times radii.
pub(crate) fn cone_samples(set: &ControlSet, radius: f64, radial: usize) -> Vec<Vec<f64>> {
    let directions = sphere_directions(set, 16);
    let mut out = vec![vec![0.0; set.dim()]];
    for k in 1..=radial {
        let r = radius * k as f64 / radial as f64;
        for d in &directions {
            out.push(d.iter().map(|v| v * r).collect());
        }
    }
    out
}

/// Unit directions of the cone. `m = 1` is exact; for `m >= 2` normalised
/// lattice points on the surface of `[-1, 1]^m` with `per_axis` points per
/// edge, filtered by cone membership.
pub fn sphere_directions(set: &ControlSet, per_axis: usize) -> Vec<Vec<f64>> {
    let m = set.dim();
    let mut dirs: Vec<Vec<f64>> = if m == 1 {
        vec![vec![-1.0], vec![1.0]]
    } else {
        let k = per_axis.max(2);
        let ticks: Vec<f64> = (0..k)
            .map(|i| -1.0 + 2.0 * i as f64 / (k - 1) as f64)
            .collect();
        let total = k.pow(m as u32);
        let mut out: Vec<Vec<f64>> = Vec::new();
        for flat in 0..total {
            let mut rest = flat;
            let p: Vec<f64> = (0..m)
                .map(|_| {
                    let t = ticks[rest % k];
                    rest /= k;
                    t
                })
                .collect();
            if p.iter().any(|v| (v.abs() - 1.0).abs() < 1e-15) {
                let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
                let d: Vec<f64> = p.iter().map(|v| v / norm).collect();
                if !out
                    .iter()
                    .any(|e| e.iter().zip(&d).all(|(a, b)| (a - b).abs() < 1e-12))
                {
                    out.push(d);
                }
            }
        }
        out
    };
    dirs.retain(|d| set.contains(d));
    dirs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn affine_q1() -> ControlProblem {
        // f(x, a) = f0(x) + f1(x) a with f0 = sin x, f1 = 2 + cos x.
        let f: VectorFn = Arc::new(|x, a| vec![x[0].sin() + (2.0 + x[0].cos()) * a[0]]);
        let l: ScalarFn = Arc::new(|x, a| x[0] * x[0] + a[0].abs());
        ControlProblem::new(
            "affine",
            1,
            ControlSet::full_cone(1),
            GrowthData::new(1, 1, 3.0, 0.0, 1.0),
            f,
            l,
        )
        .unwrap()
    }

    #[test]
    fn affine_recession_is_linear_part() {
        let p = affine_q1();
        for &(x, a) in &[(0.3, 1.5), (-1.0, -2.0), (2.0, 0.25)] {
            let rec = p.dynamics_recession_at(&[x], &[a]).unwrap();
            let expected = (2.0 + f64::cos(x)) * a;
            assert!((rec[0] - expected).abs() <= 1e-6 * expected.abs().max(1.0));
            let lrec = p.lagrangian_recession_at(&[x], &[a]).unwrap();
            assert!((lrec - a.abs()).abs() < 1e-6);
        }
    }

    #[test]
    fn homogeneous_lagrangian_recession_is_exact() {
        let lqr = builtin("lqr-1d").unwrap().with_recessions(None, None);
        for a in [-2.0, 0.5, 3.0] {
            let v = lqr.lagrangian_recession_at(&[1.7], &[a]).unwrap();
            assert!((v - a * a).abs() < 1e-6 * a * a);
        }
        // q > p: dynamics recession vanishes.
        assert_eq!(
            lqr.dynamics_recession_at(&[1.0], &[5.0]).unwrap(),
            vec![0.0]
        );
    }

    #[test]
    fn divergent_recession_is_reported() {
        let l: ScalarFn = Arc::new(|_, a| a[0].abs().powi(3));
        let f: VectorFn = Arc::new(|_, a| vec![a[0]]);
        let p = ControlProblem::new(
            "superquadratic",
            1,
            ControlSet::full_cone(1),
            GrowthData::new(1, 2, 1.0, 0.0, 1.0),
            f,
            l,
        )
        .unwrap();
        let err = p.lagrangian_recession_at(&[0.0], &[1.0]).unwrap_err();
        assert!(matches!(err, Error::RecessionUndefined { .. }));
    }

    #[test]
    fn recession_requires_a_cone() {
        let p = builtin("example-4-1").unwrap();
        assert!(matches!(
            p.recession(Which::Dynamics, &[0.0, 0.0], &[1.0]),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn evaluation_errors() {
        let p = builtin("example-4-1").unwrap();
        assert!(matches!(
            p.eval_dynamics(&[0.0, 0.0], &[0.5]),
            Err(Error::Domain(_))
        ));
        let neg: ScalarFn = Arc::new(|x, _| x[0]);
        let f: VectorFn = Arc::new(|_, a| vec![a[0]]);
        let bad = ControlProblem::new(
            "negative",
            1,
            ControlSet::CompactBox {
                bounds: vec![(-1.0, 1.0)],
            },
            GrowthData::new(1, 1, 1.0, 0.0, 0.0),
            f,
            neg,
        )
        .unwrap();
        assert!(matches!(
            bad.eval_lagrangian(&[-1.0], &[0.0]),
            Err(Error::ModelViolation(_))
        ));
        let nan: VectorFn = Arc::new(|_, _| vec![f64::NAN]);
        let bad = ControlProblem {
            dynamics: nan,
            ..bad
        };
        assert!(matches!(
            bad.eval_dynamics(&[1.0], &[0.0]),
            Err(Error::Evaluation { .. })
        ));
    }

    #[test]
    fn growth_validation() {
        assert!(GrowthData::new(2, 1, 1.0, 0.0, 1.0)
            .validate(false)
            .is_err());
        assert!(GrowthData::new(1, 2, 1.0, 0.0, 0.0).validate(true).is_err());
        assert!(GrowthData::new(1, 2, 1.0, 0.0, 0.0).validate(false).is_ok());
    }

    #[test]
    fn coercivity_reports() {
        let lqr = builtin("lqr-1d").unwrap();
        let rep = lqr.check_coercivity((&[-2.0], &[2.0]), 5.0, 2000).unwrap();
        assert!(rep.pass);
        assert!(rep.min_margin.abs() < 1e-12, "margin {}", rep.min_margin);

        let f: VectorFn = Arc::new(|_, a| vec![a[0]]);
        let l: ScalarFn = Arc::new(|_, a| a[0] * a[0]);
        let weak = ControlProblem::new(
            "a2",
            1,
            ControlSet::full_cone(1),
            GrowthData::new(1, 2, 1.0, 0.0, 2.0),
            f,
            l,
        )
        .unwrap();
        let rep = weak.check_coercivity((&[-1.0], &[1.0]), 3.0, 500).unwrap();
        assert!(!rep.pass);
        assert!(rep.witness_control[0] != 0.0);

        let ex = builtin("example-3-3").unwrap();
        let rep = ex
            .check_coercivity((&[-2.0, -2.0], &[2.0, 2.0]), 5.0, 4000)
            .unwrap();
        assert!(rep.pass);
    }

    #[test]
    fn cone_membership_is_scale_invariant() {
        let orthant = ControlSet::Cone {
            dim: 2,
            generator: ConeGenerator::NonnegativeOrthant,
        };
        for d in sphere_directions(&orthant, 5) {
            for rho in [0.0, 0.1, 1.0, 7.5, 1e3] {
                let scaled: Vec<f64> = d.iter().map(|v| v * rho).collect();
                assert!(orthant.contains(&scaled));
            }
        }
        assert!(!orthant.contains(&[-1.0, 0.5]));
    }

    #[test]
    fn target_distance_matches_membership() {
        let t = TargetSet::ball(vec![0.0, 0.0], 0.5);
        let pts = halton_box(&[-2.0, -2.0], &[2.0, 2.0], 300, 3);
        assert!(t.check_consistency(&pts, 1e-12).is_none());
        assert_eq!(t.distance(&[1.5, 0.0]), 1.0);
        assert!(t.contains(&[0.1, 0.1]));
        let b = TargetSet::cuboid(vec![-1.0], vec![1.0]);
        assert_eq!(b.distance(&[3.0]), 2.0);
        assert!(b.contains(&[0.0]));
    }
}
