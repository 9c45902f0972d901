//! TOML problem files.
//!
//! A problem is either a builtin (optionally with `[params]`) or a closed-form
//! model written in the expression grammar of [`super::expr`]:
//!
//! ```toml
//! name = "lqr"
//! dimension = 1
//! dynamics = ["a1"]
//! lagrangian = "x1^2 + a1^2"
//!
//! [control-set]
//! kind = "cone"          # or "compact-box" (bounds) / "compact-finite" (points)
//! dimension = 1
//! generator = "full"     # or "orthant"
//!
//! [growth]
//! p = 1
//! q = 2
//! C1 = 0.0
//! C2 = 1.0
//! M = 1.0
//!
//! [recessions]
//! dynamics = ["0"]
//! lagrangian = "a1^2"
//!
//! [target-set]
//! kind = "point"         # or "ball" (center, radius) / "box" (lo, hi)
//! center = [0.0]
//! ```
//!
//! Torus problems add `periods = [..]` and `[controllability] c, gamma`.
//! A builtin file may still override `target-set`. An optional `[grid]`
//! table supplies a default grid for the command-line tool.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::expr::{compile, state_control_resolver, Expr};
use super::{
    builtin_with, ConeGenerator, ControlProblem, ControlSet, ErgodicData, GrowthData,
    ModulusDescriptor, ScalarFn, TargetSet, VectorFn,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
pub enum ParamValue {
    Scalar(f64),
    List(Vec<f64>),
}

impl ParamValue {
    fn to_vec(&self) -> Vec<f64> {
        match self {
            ParamValue::Scalar(v) => vec![*v],
            ParamValue::List(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ProblemFile {
    pub name: Option<String>,
    pub builtin: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, ParamValue>,
    pub dimension: Option<usize>,
    pub control_set: Option<ControlSetSpec>,
    pub growth: Option<GrowthSpec>,
    pub dynamics: Option<Vec<String>>,
    pub lagrangian: Option<String>,
    pub recessions: Option<RecessionSpec>,
    pub target_set: Option<TargetSpec>,
    pub periods: Option<Vec<f64>>,
    pub controllability: Option<ControllabilitySpec>,
    pub grid: Option<GridSpec>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ControlSetSpec {
    CompactBox {
        bounds: Vec<[f64; 2]>,
    },
    CompactFinite {
        points: Vec<Vec<f64>>,
    },
    Cone {
        dimension: usize,
        generator: Option<String>,
    },
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthSpec {
    pub p: u32,
    pub q: u32,
    #[serde(rename = "C1", default)]
    pub c1: f64,
    #[serde(rename = "C2", default)]
    pub c2: f64,
    #[serde(rename = "M", default = "one")]
    pub m: f64,
    pub modulus: Option<ModulusSpec>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ModulusSpec {
    pub family: String,
    #[serde(default)]
    pub constants: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RecessionSpec {
    pub dynamics: Option<Vec<String>>,
    pub lagrangian: Option<String>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TargetSpec {
    Point { center: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl TargetSpec {
    pub fn build(&self, n: usize) -> Result<TargetSet> {
        let check = |v: &[f64], what: &str| -> Result<()> {
            if v.len() != n {
                return Err(Error::Config(format!(
                    "target-set {what} has {} coordinates, expected {n}",
                    v.len()
                )));
            }
            Ok(())
        };
        match self {
            TargetSpec::Point { center } => {
                check(center, "center")?;
                Ok(TargetSet::point(center.clone()))
            }
            TargetSpec::Ball { center, radius } => {
                check(center, "center")?;
                if !(*radius >= 0.0) {
                    return Err(Error::Config(format!(
                        "target-set radius {radius} is negative"
                    )));
                }
                Ok(TargetSet::ball(center.clone(), *radius))
            }
            TargetSpec::Box { lo, hi } => {
                check(lo, "lo")?;
                check(hi, "hi")?;
                if lo.iter().zip(hi).any(|(a, b)| a > b) {
                    return Err(Error::Config("target-set box has lo > hi".into()));
                }
                Ok(TargetSet::cuboid(lo.clone(), hi.clone()))
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ControllabilitySpec {
    pub c: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub axes: Vec<AxisSpec>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub min: f64,
    pub max: f64,
    pub nodes: usize,
    #[serde(default)]
    pub periodic: bool,
}

/// Converts a TOML error into a located parse error.
fn toml_error(text: &str, origin: &str, err: toml::de::Error) -> Error {
    let location = match err.span() {
        Some(span) => {
            let before = &text[..span.start.min(text.len())];
            let line = before.matches('\n').count() + 1;
            let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
            format!("{origin}:{line}:{column}")
        }
        None => origin.to_string(),
    };
    Error::parse(location, err.message().to_string())
}

impl ProblemFile {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| toml_error(text, origin, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn build(&self) -> Result<ControlProblem> {
        let mut problem = match &self.builtin {
            Some(name) => self.build_builtin(name)?,
            None => self.build_expressions()?,
        };
        if let Some(name) = &self.name {
            problem.name = name.clone();
        }
        if let Some(t) = &self.target_set {
            let target = t.build(problem.state_dim)?;
            problem = problem.with_target(target);
        }
        Ok(problem)
    }

    fn build_builtin(&self, name: &str) -> Result<ControlProblem> {
        let model_keys = [
            ("dimension", self.dimension.is_some()),
            ("control-set", self.control_set.is_some()),
            ("growth", self.growth.is_some()),
            ("dynamics", self.dynamics.is_some()),
            ("lagrangian", self.lagrangian.is_some()),
            ("recessions", self.recessions.is_some()),
            ("periods", self.periods.is_some()),
            ("controllability", self.controllability.is_some()),
        ];
        if let Some((key, _)) = model_keys.iter().find(|(_, set)| *set) {
            return Err(Error::parse(
                key.to_string(),
                format!("field `{key}` cannot be combined with `builtin`"),
            ));
        }
        let params = self
            .params
            .iter()
            .map(|(k, v)| (k.clone(), v.to_vec()))
            .collect();
        builtin_with(name, &params)
    }

    fn build_expressions(&self) -> Result<ControlProblem> {
        let missing =
            |field: &str| Error::parse(field.to_string(), format!("missing field `{field}`"));
        if !self.params.is_empty() {
            return Err(Error::parse(
                "params",
                "`params` is only meaningful with `builtin`",
            ));
        }
        let n = self.dimension.ok_or_else(|| missing("dimension"))?;
        let set_spec = self
            .control_set
            .as_ref()
            .ok_or_else(|| missing("control-set"))?;
        let control_set = match set_spec {
            ControlSetSpec::CompactBox { bounds } => ControlSet::CompactBox {
                bounds: bounds.iter().map(|b| (b[0], b[1])).collect(),
            },
            ControlSetSpec::CompactFinite { points } => {
                if points.is_empty() {
                    return Err(Error::parse(
                        "control-set.points",
                        "finite control set is empty",
                    ));
                }
                ControlSet::CompactFinite {
                    points: points.clone(),
                }
            }
            ControlSetSpec::Cone {
                dimension,
                generator,
            } => {
                let generator = match generator.as_deref() {
                    None | Some("full") => ConeGenerator::Full,
                    Some("orthant") => ConeGenerator::NonnegativeOrthant,
                    Some(other) => {
                        return Err(Error::parse(
                            "control-set.generator",
                            format!("unknown cone generator `{other}` (expected full or orthant)"),
                        ))
                    }
                };
                ControlSet::Cone {
                    dim: *dimension,
                    generator,
                }
            }
        };
        let m = control_set.dim();
        let g = self.growth.as_ref().ok_or_else(|| missing("growth"))?;
        let mut growth = GrowthData::new(g.p, g.q, g.m, g.c1, g.c2);
        if let Some(modulus) = &g.modulus {
            growth.modulus = ModulusDescriptor {
                family: modulus.family.clone(),
                constants: modulus.constants.clone(),
            };
        }
        let dyn_src = self.dynamics.as_ref().ok_or_else(|| missing("dynamics"))?;
        let lag_src = self
            .lagrangian
            .as_ref()
            .ok_or_else(|| missing("lagrangian"))?;
        let dynamics = vector_fn(dyn_src, n, m, "dynamics")?;
        let lagrangian = scalar_fn(lag_src, n, m, "lagrangian")?;
        let mut problem = ControlProblem::new(
            self.name.clone().unwrap_or_else(|| "unnamed".into()),
            n,
            control_set,
            growth,
            dynamics,
            lagrangian,
        )
        .map_err(|e| Error::parse("control-set/growth", e.to_string()))?;
        if let Some(rec) = &self.recessions {
            let f_rec = rec
                .dynamics
                .as_ref()
                .map(|src| vector_fn(src, n, m, "recessions.dynamics"))
                .transpose()?;
            let l_rec = rec
                .lagrangian
                .as_ref()
                .map(|src| scalar_fn(src, n, m, "recessions.lagrangian"))
                .transpose()?;
            problem = problem.with_recessions(f_rec, l_rec);
        }
        match (&self.periods, &self.controllability) {
            (Some(periods), Some(c)) => {
                problem = problem
                    .with_ergodic(ErgodicData {
                        periods: periods.clone(),
                        controllability_c: c.c,
                        controllability_gamma: c.gamma,
                    })
                    .map_err(|e| Error::parse("periods", e.to_string()))?;
            }
            (None, None) => {}
            (Some(_), None) => return Err(missing("controllability")),
            (None, Some(_)) => return Err(missing("periods")),
        }
        Ok(problem)
    }
}

fn compile_field(src: &str, n: usize, m: usize, field: &str) -> Result<Expr> {
    let resolve = state_control_resolver(n, m);
    compile(src, &resolve).map_err(|e| match e {
        Error::Parse { location, message } => {
            Error::parse(format!("{field} ({location})"), message)
        }
        other => other,
    })
}

fn vector_fn(sources: &[String], n: usize, m: usize, field: &str) -> Result<VectorFn> {
    if sources.len() != n {
        return Err(Error::parse(
            field.to_string(),
            format!("expected {n} expressions, got {}", sources.len()),
        ));
    }
    let exprs: Vec<Expr> = sources
        .iter()
        .enumerate()
        .map(|(i, s)| compile_field(s, n, m, &format!("{field}[{i}]")))
        .collect::<Result<_>>()?;
    Ok(Arc::new(move |x: &[f64], a: &[f64]| {
        let slots: Vec<f64> = x.iter().chain(a).copied().collect();
        exprs.iter().map(|e| e.eval(&slots)).collect()
    }))
}

fn scalar_fn(source: &str, n: usize, m: usize, field: &str) -> Result<ScalarFn> {
    let expr = compile_field(source, n, m, field)?;
    Ok(Arc::new(move |x: &[f64], a: &[f64]| {
        let slots: Vec<f64> = x.iter().chain(a).copied().collect();
        expr.eval(&slots)
    }))
}
