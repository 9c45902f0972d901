//! Control meshes and the mesh-maximized Hamiltonians.
//!
//! With `(F, L, theta)` the local velocity, running cost and physical-time
//! rate of a mesh control (`theta = w0^q` for extended controls, `1` for
//! ordinary ones):
//!
//! ```text
//! H(x, p)          = max  -<F, p> - L
//! H_delta(x, r, p) = max  delta r theta - <F, p> - L
//! K(x, u, p)       = max  -<F, p> - L (1 - u)
//! H_tilde(x, p)    = max  -<F, p> - L + lambda theta
//! ```

use serde::Serialize;

use crate::error::{Error, Result};
use crate::extension::{extend, ExtendedControlPoint, ExtendedProblem};
use crate::problem::{sphere_directions, ControlProblem, ControlSet};

/// A problem in the form the solvers consume: compact problems directly,
/// cone problems through their compactification.
#[derive(Debug, Clone)]
pub enum Model {
    Ordinary(ControlProblem),
    Extended(ExtendedProblem),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ControlPoint {
    Ordinary(Vec<f64>),
    Extended(ExtendedControlPoint),
}

/// Local data of one control at one state.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalData {
    pub velocity: Vec<f64>,
    pub cost: f64,
    /// Physical time per unit of scheme time.
    pub time_rate: f64,
}

impl Model {
    /// Extends cone problems; keeps compact ones.
    pub fn new(problem: &ControlProblem) -> Result<Self> {
        if problem.control_set.is_compact() {
            Ok(Model::Ordinary(problem.clone()))
        } else {
            Ok(Model::Extended(extend(problem)?))
        }
    }

    pub fn problem(&self) -> &ControlProblem {
        match self {
            Model::Ordinary(p) => p,
            Model::Extended(e) => &e.base,
        }
    }

    pub fn state_dim(&self) -> usize {
        self.problem().state_dim
    }

    pub fn local(&self, x: &[f64], c: &ControlPoint) -> Result<LocalData> {
        match (self, c) {
            (Model::Ordinary(p), ControlPoint::Ordinary(a)) => Ok(LocalData {
                velocity: p.eval_dynamics(x, a)?,
                cost: p.eval_lagrangian(x, a)?,
                time_rate: 1.0,
            }),
            (Model::Extended(e), ControlPoint::Extended(w)) => Ok(LocalData {
                velocity: e.f_bar_at(x, w)?,
                cost: e.l_bar_at(x, w)?,
                time_rate: w.time_rate(e.q),
            }),
            _ => Err(Error::Config(
                "control mesh kind does not match the model".into(),
            )),
        }
    }

    /// Default mesh: 65-point sphere mesh per direction pair for cones,
    /// 21-point lattice per axis for boxes, the set itself when finite.
    pub fn default_mesh(&self) -> Result<ControlMesh> {
        match self {
            Model::Extended(e) => ControlMesh::sphere(e, 32, 9),
            Model::Ordinary(p) => match &p.control_set {
                ControlSet::CompactBox { bounds } => ControlMesh::lattice(bounds, 21),
                ControlSet::CompactFinite { points } => Ok(ControlMesh::finite(points.clone())),
                ControlSet::Cone { .. } => unreachable!("cone problems are extended"),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MeshProvenance {
    /// Radii `j / radial` times unit directions of the cone, lifted to `S(A)`.
    SphereRadius {
        radial: usize,
        per_axis: usize,
    },
    BoxLattice {
        per_axis: usize,
    },
    FiniteSet,
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlMesh {
    pub points: Vec<ControlPoint>,
    pub provenance: MeshProvenance,
}

impl ControlMesh {
    /// Mesh of `S(A)`: `w = r d` for radii `r = j / radial`, `j = 0..=radial`,
    /// and unit directions `d` of the cone; `w0 = (1 - r^q)^(1/q)`. Contains
    /// the pole `(1, 0)` once and the `w0 = 0` layer exactly.
    pub fn sphere(ext: &ExtendedProblem, radial: usize, per_axis: usize) -> Result<Self> {
        if radial == 0 {
            return Err(Error::Config(
                "sphere mesh needs at least one radius".into(),
            ));
        }
        let q = ext.q;
        let dirs = sphere_directions(&ext.base.control_set, per_axis);
        let mut points = vec![ControlPoint::Extended(ExtendedControlPoint {
            w0: 1.0,
            w: vec![0.0; ext.base.control_dim()],
        })];
        for j in 1..=radial {
            let r = j as f64 / radial as f64;
            let w0 = if j == radial {
                0.0
            } else {
                (1.0 - r.powi(q as i32)).powf(1.0 / q as f64)
            };
            for d in &dirs {
                points.push(ControlPoint::Extended(ExtendedControlPoint {
                    w0,
                    w: d.iter().map(|v| v * r).collect(),
                }));
            }
        }
        Ok(ControlMesh {
            points,
            provenance: MeshProvenance::SphereRadius { radial, per_axis },
        })
    }

    /// Tensor lattice with `per_axis` equispaced values per interval
    /// (endpoints included; one value means the midpoint).
    pub fn lattice(bounds: &[(f64, f64)], per_axis: usize) -> Result<Self> {
        if per_axis == 0 || bounds.is_empty() {
            return Err(Error::Config(
                "lattice mesh needs at least one point per axis".into(),
            ));
        }
        let ticks = |&(lo, hi): &(f64, f64)| -> Vec<f64> {
            if per_axis == 1 {
                vec![0.5 * (lo + hi)]
            } else {
                (0..per_axis)
                    .map(|i| lo + (hi - lo) * i as f64 / (per_axis - 1) as f64)
                    .collect()
            }
        };
        let axes: Vec<Vec<f64>> = bounds.iter().map(ticks).collect();
        let mut points = vec![Vec::new()];
        for axis in &axes {
            points = points
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        Ok(ControlMesh {
            points: points.into_iter().map(ControlPoint::Ordinary).collect(),
            provenance: MeshProvenance::BoxLattice { per_axis },
        })
    }

    pub fn finite(points: Vec<Vec<f64>>) -> Self {
        ControlMesh {
            points: points.into_iter().map(ControlPoint::Ordinary).collect(),
            provenance: MeshProvenance::FiniteSet,
        }
    }

    /// Arbitrary user-chosen points (ordinary or extended).
    pub fn custom(points: Vec<ControlPoint>) -> Self {
        ControlMesh {
            points,
            provenance: MeshProvenance::Custom,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Checks non-emptiness, kind and membership; `S(A)` meshes must contain
    /// the pole `(1, 0)` and a point with `w0 = 0`.
    pub fn validate(&self, model: &Model) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::Config("control mesh is empty".into()));
        }
        match model {
            Model::Ordinary(p) => {
                for c in &self.points {
                    match c {
                        ControlPoint::Ordinary(a) if p.control_set.contains(a) => {}
                        other => {
                            return Err(Error::Config(format!(
                                "mesh point {other:?} is not a control of the problem"
                            )))
                        }
                    }
                }
            }
            Model::Extended(e) => {
                let mut pole = false;
                let mut equator = false;
                for c in &self.points {
                    let ControlPoint::Extended(w) = c else {
                        return Err(Error::Config("extended model needs an S(A) mesh".into()));
                    };
                    let direction_ok =
                        w.w.iter().all(|v| *v == 0.0) || e.base.control_set.contains(&w.w);
                    if w.sphere_defect(e.q) > 1e-10 || !(w.w0 >= 0.0) || !direction_ok {
                        return Err(Error::Config(format!("mesh point {w:?} is not on S(A)")));
                    }
                    pole |= w.w0 == 1.0;
                    equator |= w.w0 == 0.0;
                }
                if !pole || !equator {
                    return Err(Error::Config(
                        "S(A) mesh must contain (1, 0) and a point with w0 = 0".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// A finer mesh containing every point of `self`.
    pub fn refine(&self, model: &Model) -> Result<Self> {
        match (&self.provenance, model) {
            (MeshProvenance::SphereRadius { radial, per_axis }, Model::Extended(e)) => {
                Self::sphere(e, 2 * radial, 2 * per_axis - 1)
            }
            (MeshProvenance::BoxLattice { per_axis }, Model::Ordinary(p)) => match &p.control_set {
                ControlSet::CompactBox { bounds } => {
                    let next = if *per_axis == 1 { 3 } else { 2 * per_axis - 1 };
                    Self::lattice(bounds, next)
                }
                _ => Err(Error::Config(
                    "lattice mesh on a non-box control set".into(),
                )),
            },
            _ => Ok(self.clone()),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Maximizes `score(local)` over the mesh; ties go to the first index.
fn maximize(
    model: &Model,
    mesh: &ControlMesh,
    x: &[f64],
    score: impl Fn(&LocalData) -> f64,
) -> Result<(f64, usize)> {
    if mesh.is_empty() {
        return Err(Error::Config("control mesh is empty".into()));
    }
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, c) in mesh.points.iter().enumerate() {
        let v = score(&model.local(x, c)?);
        if v > best.0 {
            best = (v, i);
        }
    }
    Ok(best)
}

/// `H(x, p)` and a maximizing mesh control.
pub fn eval_h(
    model: &Model,
    mesh: &ControlMesh,
    x: &[f64],
    p: &[f64],
) -> Result<(f64, ControlPoint)> {
    let (v, i) = maximize(model, mesh, x, |d| -dot(&d.velocity, p) - d.cost)?;
    Ok((v, mesh.points[i].clone()))
}

/// `H_delta(x, r, p)`.
pub fn eval_h_delta(
    model: &Model,
    mesh: &ControlMesh,
    x: &[f64],
    r: f64,
    p: &[f64],
    delta: f64,
) -> Result<f64> {
    maximize(model, mesh, x, |d| {
        delta * r * d.time_rate - dot(&d.velocity, p) - d.cost
    })
    .map(|b| b.0)
}

/// Kruzkov-transformed Hamiltonian `K(x, u, p)`, `u` in `[0, 1]`.
pub fn eval_k(model: &Model, mesh: &ControlMesh, x: &[f64], u: f64, p: &[f64]) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::Domain(format!("u = {u} is outside [0, 1]")));
    }
    maximize(model, mesh, x, |d| {
        -dot(&d.velocity, p) - d.cost * (1.0 - u)
    })
    .map(|b| b.0)
}

/// Effective Hamiltonian `H_tilde(x, p)` of the cell problem.
pub fn eval_h_tilde(
    model: &Model,
    mesh: &ControlMesh,
    x: &[f64],
    p: &[f64],
    lambda: f64,
) -> Result<f64> {
    maximize(model, mesh, x, |d| {
        -dot(&d.velocity, p) - d.cost + lambda * d.time_rate
    })
    .map(|b| b.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::builtin;
    use std::f64::consts::PI;

    fn model(name: &str) -> Model {
        Model::new(&builtin(name).unwrap()).unwrap()
    }

    #[test]
    fn zero_costate_gives_minus_min_cost() {
        let m = model("example-3-3");
        let mesh = m.default_mesh().unwrap();
        let (h, arg) = eval_h(&m, &mesh, &[0.5, 1.0], &[0.0, 0.0]).unwrap();
        // min of l_bar over S(A) is 0 at w0 = 0 only if |w| = 0, impossible;
        // l_bar = 1.25 w0 + |w| with w0 + |w| = 1 is minimized at w0 = 0.
        assert!((h + 1.0).abs() < 1e-12, "{h}");
        assert!(matches!(arg, ControlPoint::Extended(ref w) if w.w0 == 0.0));
        let (h0, _) = eval_h(&m, &mesh, &[0.0, 0.0], &[0.3, -2.0]).unwrap();
        assert!(h0 >= 0.0);
        let (h0, _) = eval_h(&m, &mesh, &[0.0, 0.0], &[0.0, 0.0]).unwrap();
        assert_eq!(h0, 0.0);
    }

    #[test]
    fn truncated_lqr_matches_closed_form() {
        let p = builtin("lqr-1d").unwrap();
        let truncated = crate::problem::ControlProblem {
            control_set: ControlSet::CompactBox {
                bounds: vec![(-10.0, 10.0)],
            },
            ..p
        };
        let m = Model::new(&truncated).unwrap();
        let mesh = ControlMesh::lattice(&[(-10.0, 10.0)], 2001).unwrap();
        let (h, arg) = eval_h(&m, &mesh, &[0.0], &[2.0]).unwrap();
        assert!((h - 1.0).abs() < 1e-12);
        assert_eq!(arg, ControlPoint::Ordinary(vec![-1.0]));
    }

    #[test]
    fn discounted_and_kruzkov_special_cases() {
        let m = model("lqr-1d");
        let mesh = m.default_mesh().unwrap();
        let (x, p) = ([0.7], [-1.3]);
        let (h, _) = eval_h(&m, &mesh, &x, &p).unwrap();
        assert_eq!(eval_h_delta(&m, &mesh, &x, 2.0, &p, 0.0).unwrap(), h);
        assert_eq!(eval_h_delta(&m, &mesh, &x, 0.0, &p, 0.7).unwrap(), h);
        assert!(eval_h_delta(&m, &mesh, &[0.0], 1.0, &[0.0], 0.5).unwrap() >= 0.5);
        assert_eq!(eval_k(&m, &mesh, &x, 0.0, &p).unwrap(), h);
        assert!(eval_k(&m, &mesh, &x, 1.5, &p).is_err());
        let k1 = eval_k(&m, &mesh, &x, 1.0, &p).unwrap();
        let max_transport = mesh
            .points
            .iter()
            .map(|c| -m.local(&x, c).unwrap().velocity[0] * p[0])
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(k1, max_transport);
        assert_eq!(eval_h_tilde(&m, &mesh, &x, &p, 0.0).unwrap(), h);
    }

    #[test]
    fn torus_effective_hamiltonian_at_the_minimum() {
        let m = model("ergodic-torus-1d");
        let mesh = m.default_mesh().unwrap();
        let v = eval_h_tilde(&m, &mesh, &[1.5 * PI], &[0.0], 1.0).unwrap();
        assert!(v.abs() < 1e-12, "{v}");
    }

    #[test]
    fn mesh_invariants_and_refinement() {
        let m = model("lqr-1d");
        let mesh = m.default_mesh().unwrap();
        assert_eq!(mesh.len(), 65);
        mesh.validate(&m).unwrap();
        let fine = mesh.refine(&m).unwrap();
        fine.validate(&m).unwrap();
        for c in &mesh.points {
            let ControlPoint::Extended(w) = c else {
                panic!()
            };
            assert!(fine.points.iter().any(|d| match d {
                ControlPoint::Extended(v) =>
                    (v.w0 - w.w0).abs() < 1e-14 && (v.w[0] - w.w[0]).abs() < 1e-14,
                _ => false,
            }));
        }
        let bad = ControlMesh::custom(vec![ControlPoint::Ordinary(vec![0.0])]);
        assert!(bad.validate(&m).is_err());
        assert!(eval_h(&m, &ControlMesh::custom(vec![]), &[0.0], &[0.0]).is_err());

        let lattice = ControlMesh::lattice(&[(-1.0, 1.0), (0.0, 2.0)], 3).unwrap();
        assert_eq!(lattice.len(), 9);
    }
}
