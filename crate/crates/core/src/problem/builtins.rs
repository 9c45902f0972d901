//! Built-in problems: the worked examples plus LQR and torus test cases.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

use super::{ControlProblem, ControlSet, ErgodicData, GrowthData, ScalarFn, TargetSet, VectorFn};
use crate::error::{Error, Result};

pub const BUILTIN_NAMES: [&str; 5] = [
    "example-3-3",
    "example-4-1",
    "lqr-1d",
    "lqr-nd",
    "ergodic-torus-1d",
];

/// Builtin with default parameters.
pub fn builtin(name: &str) -> Result<ControlProblem> {
    builtin_with(name, &BTreeMap::new())
}

/// Builtin with parameter overrides. Recognised parameters:
/// `lqr-1d`: `Q`, `R` (scalars, default 1);
/// `lqr-nd`: `n`, `Q`, `R` (row-major `n x n` matrices).
pub fn builtin_with(name: &str, params: &BTreeMap<String, Vec<f64>>) -> Result<ControlProblem> {
    let allowed: &[&str] = match name {
        "lqr-1d" => &["Q", "R"],
        "lqr-nd" => &["n", "Q", "R"],
        _ => &[],
    };
    if let Some(k) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(Error::Config(format!(
            "builtin `{name}` has no parameter `{k}`"
        )));
    }
    match name {
        "example-3-3" => example_3_3(),
        "example-4-1" => example_4_1(),
        "lqr-1d" => {
            let q = scalar_param(params, "Q", 1.0)?;
            let r = scalar_param(params, "R", 1.0)?;
            lqr_1d(q, r)
        }
        "lqr-nd" => {
            let n = scalar_param(params, "n", 2.0)?;
            if n < 1.0 || n.fract() != 0.0 {
                return Err(Error::Config(format!(
                    "lqr-nd: n must be a positive integer, got {n}"
                )));
            }
            let n = n as usize;
            let (q_def, r_def) = default_lqr_matrices(n);
            let q = matrix_param(params, "Q", n, q_def)?;
            let r = matrix_param(params, "R", n, r_def)?;
            lqr_nd(q, r)
        }
        "ergodic-torus-1d" => ergodic_torus_1d(),
        _ => Err(Error::Lookup(format!(
            "unknown builtin `{name}` (known: {})",
            BUILTIN_NAMES.join(", ")
        ))),
    }
}

fn scalar_param(params: &BTreeMap<String, Vec<f64>>, key: &str, default: f64) -> Result<f64> {
    match params.get(key) {
        None => Ok(default),
        Some(v) if v.len() == 1 && v[0].is_finite() => Ok(v[0]),
        Some(v) => Err(Error::Config(format!(
            "parameter `{key}` must be one number, got {v:?}"
        ))),
    }
}

fn matrix_param(
    params: &BTreeMap<String, Vec<f64>>,
    key: &str,
    n: usize,
    default: DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    match params.get(key) {
        None => Ok(default),
        Some(v) if v.len() == n * n => Ok(DMatrix::from_row_slice(n, n, v)),
        Some(v) => Err(Error::Config(format!(
            "parameter `{key}` must have {} entries, got {}",
            n * n,
            v.len()
        ))),
    }
}

/// A non-diagonal SPD `Q` and a diagonal `R` with unequal entries, so the
/// n-dimensional oracle is not a trivial product of 1-D problems.
pub fn default_lqr_matrices(n: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let q = DMatrix::from_fn(n, n, |i, j| if i == j { 2.0 } else { 0.5 });
    let r = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 + i as f64 } else { 0.0 });
    (q, r)
}

fn example_3_3() -> Result<ControlProblem> {
    let f: VectorFn = Arc::new(|x, a| vec![a[0], x[0].abs() + x[1].abs()]);
    let l: ScalarFn = Arc::new(|x, a| x[0] * x[0] + x[1] * x[1] + a[0].abs());
    let f_rec: VectorFn = Arc::new(|_, a| vec![a[0], 0.0]);
    let l_rec: ScalarFn = Arc::new(|_, a| a[0].abs());
    Ok(ControlProblem::new(
        "example-3-3",
        2,
        ControlSet::full_cone(1),
        GrowthData::new(1, 1, 2.0, 0.0, 1.0),
        f,
        l,
    )?
    .with_recessions(Some(f_rec), Some(l_rec))
    .with_target(TargetSet::point(vec![0.0, 0.0])))
}

fn example_4_1() -> Result<ControlProblem> {
    let f: VectorFn = Arc::new(|x, a| vec![a[0], x[0].abs()]);
    let l: ScalarFn = Arc::new(|x, _| x[0] * x[0] + x[1] * x[1]);
    Ok(ControlProblem::new(
        "example-4-1",
        2,
        ControlSet::CompactFinite {
            points: vec![vec![-1.0], vec![1.0]],
        },
        GrowthData::new(1, 1, 1.0, 0.0, 0.0),
        f,
        l,
    )?
    .with_target(TargetSet::point(vec![0.0, 0.0])))
}

fn lqr_1d(q: f64, r: f64) -> Result<ControlProblem> {
    if !(r > 0.0) || q < 0.0 {
        return Err(Error::Config(format!(
            "lqr-1d needs R > 0 and Q >= 0 (Q = {q}, R = {r})"
        )));
    }
    let f: VectorFn = Arc::new(|_, a| vec![a[0]]);
    let l: ScalarFn = Arc::new(move |x, a| q * x[0] * x[0] + r * a[0] * a[0]);
    let f_rec: VectorFn = Arc::new(|_, _| vec![0.0]);
    let l_rec: ScalarFn = Arc::new(move |_, a| r * a[0] * a[0]);
    Ok(ControlProblem::new(
        "lqr-1d",
        1,
        ControlSet::full_cone(1),
        GrowthData::new(1, 2, 1.0, 0.0, r),
        f,
        l,
    )?
    .with_recessions(Some(f_rec), Some(l_rec))
    .with_target(TargetSet::point(vec![0.0])))
}

fn quadratic_form(m: &DMatrix<f64>, v: &[f64]) -> f64 {
    let n = v.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += v[i] * m[(i, j)] * v[j];
        }
    }
    s
}

fn lqr_nd(q: DMatrix<f64>, r: DMatrix<f64>) -> Result<ControlProblem> {
    let n = q.nrows();
    let sym = |m: &DMatrix<f64>| (m - m.transpose()).amax() <= 1e-12 * m.amax().max(1.0);
    if !sym(&q) || !sym(&r) {
        return Err(Error::Config("lqr-nd: Q and R must be symmetric".into()));
    }
    let r_min = SymmetricEigen::new(r.clone()).eigenvalues.min();
    let q_min = SymmetricEigen::new(q.clone()).eigenvalues.min();
    if !(r_min > 0.0) || q_min < -1e-12 {
        return Err(Error::Config(
            "lqr-nd needs R positive definite and Q positive semidefinite".into(),
        ));
    }
    let (q1, r1, r2) = (q.clone(), r.clone(), r);
    let f: VectorFn = Arc::new(|_, a| a.to_vec());
    let l: ScalarFn = Arc::new(move |x, a| quadratic_form(&q1, x) + quadratic_form(&r1, a));
    let f_rec: VectorFn = Arc::new(move |_, _| vec![0.0; n]);
    let l_rec: ScalarFn = Arc::new(move |_, a| quadratic_form(&r2, a));
    Ok(ControlProblem::new(
        "lqr-nd",
        n,
        ControlSet::full_cone(n),
        GrowthData::new(1, 2, 1.0, 0.0, r_min),
        f,
        l,
    )?
    .with_recessions(Some(f_rec), Some(l_rec))
    .with_target(TargetSet::point(vec![0.0; n])))
}

fn ergodic_torus_1d() -> Result<ControlProblem> {
    let f: VectorFn = Arc::new(|_, a| vec![a[0]]);
    let l: ScalarFn = Arc::new(|x, a| 2.0 + x[0].sin() + a[0] * a[0]);
    let f_rec: VectorFn = Arc::new(|_, _| vec![0.0]);
    let l_rec: ScalarFn = Arc::new(|_, a| a[0] * a[0]);
    ControlProblem::new(
        "ergodic-torus-1d",
        1,
        ControlSet::full_cone(1),
        GrowthData::new(1, 2, 3.0, 0.0, 1.0),
        f,
        l,
    )?
    .with_recessions(Some(f_rec), Some(l_rec))
    .with_ergodic(ErgodicData {
        periods: vec![2.0 * PI],
        controllability_c: 2.0,
        controllability_gamma: 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::halton_box;

    #[test]
    fn worked_example_evaluations() {
        let p = builtin("example-3-3").unwrap();
        assert_eq!(
            p.eval_dynamics(&[1.0, 0.0], &[2.0]).unwrap(),
            vec![2.0, 1.0]
        );
        assert_eq!(p.eval_lagrangian(&[1.0, 0.0], &[2.0]).unwrap(), 3.0);

        let lqr = builtin("lqr-1d").unwrap();
        assert_eq!(lqr.eval_dynamics(&[3.0], &[-1.0]).unwrap(), vec![-1.0]);
        assert_eq!(lqr.eval_dynamics(&[0.0], &[0.0]).unwrap(), vec![0.0]);
        assert_eq!(lqr.eval_lagrangian(&[2.0], &[1.0]).unwrap(), 5.0);
        assert_eq!(lqr.eval_lagrangian(&[0.0], &[0.0]).unwrap(), 0.0);

        let ex = builtin("example-4-1").unwrap();
        assert_eq!(ex.state_dim, 2);
        assert_eq!(
            ex.eval_dynamics(&[-0.5, 3.0], &[1.0]).unwrap(),
            vec![1.0, 0.5]
        );
        assert_eq!(ex.eval_lagrangian(&[1.0, 2.0], &[-1.0]).unwrap(), 5.0);
        assert!(ex.eval_dynamics(&[0.0, 0.0], &[0.0]).is_err());
    }

    #[test]
    fn parameters() {
        let mut params = BTreeMap::new();
        params.insert("Q".to_string(), vec![4.0]);
        params.insert("R".to_string(), vec![0.25]);
        let p = builtin_with("lqr-1d", &params).unwrap();
        assert_eq!(p.eval_lagrangian(&[1.0], &[2.0]).unwrap(), 5.0);
        assert_eq!(p.growth.c2, 0.25);
        params.insert("bogus".to_string(), vec![1.0]);
        assert!(builtin_with("lqr-1d", &params).is_err());
        assert!(matches!(builtin("no-such-problem"), Err(Error::Lookup(_))));

        let mut nd = BTreeMap::new();
        nd.insert("n".to_string(), vec![3.0]);
        let p = builtin_with("lqr-nd", &nd).unwrap();
        assert_eq!(p.state_dim, 3);
        nd.insert(
            "R".to_string(),
            vec![1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0],
        );
        assert!(builtin_with("lqr-nd", &nd).is_err());
    }

    #[test]
    fn lagrangians_are_nonnegative_on_samples() {
        for name in BUILTIN_NAMES {
            let p = builtin(name).unwrap();
            let n = p.state_dim;
            let m = p.control_dim();
            let mut lo = vec![-5.0; n + m];
            let mut hi = vec![5.0; n + m];
            if let ControlSet::CompactFinite { .. } = p.control_set {
                lo.truncate(n);
                hi.truncate(n);
            }
            for (k, s) in halton_box(&lo, &hi, 1000, 7).into_iter().enumerate() {
                let a = if s.len() == n {
                    vec![if k % 2 == 0 { 1.0 } else { -1.0 }]
                } else {
                    s[n..].to_vec()
                };
                let v = p.eval_lagrangian(&s[..n], &a).unwrap();
                assert!(v >= 0.0, "{name}: l = {v}");
            }
        }
    }

    #[test]
    fn numerical_recession_matches_supplied() {
        for name in ["example-3-3", "lqr-1d", "lqr-nd", "ergodic-torus-1d"] {
            let p = builtin(name).unwrap();
            let bare = p.clone().with_recessions(None, None);
            let n = p.state_dim;
            let m = p.control_dim();
            let lo = vec![-3.0; n + m];
            let hi = vec![3.0; n + m];
            for s in halton_box(&lo, &hi, 100, 11) {
                let (x, a) = s.split_at(n);
                let want = p.lagrangian_recession_at(x, a).unwrap();
                let got = bare.lagrangian_recession_at(x, a).unwrap();
                assert!(
                    (want - got).abs() <= 1e-6 * want.abs().max(1.0),
                    "{name}: {want} vs {got}"
                );
                let want = p.dynamics_recession_at(x, a).unwrap();
                let got = bare.dynamics_recession_at(x, a).unwrap();
                for (u, v) in want.iter().zip(&got) {
                    assert!(
                        (u - v).abs() <= 1e-6 * u.abs().max(1.0),
                        "{name}: {u} vs {v}"
                    );
                }
                if p.growth.q > p.growth.p {
                    assert!(got.iter().all(|v| v.abs() <= 1e-8));
                    assert!(want.iter().all(|v| v.abs() <= 1e-8));
                }
            }
        }
    }

    #[test]
    fn torus_data() {
        let p = builtin("ergodic-torus-1d").unwrap();
        let e = p.ergodic.as_ref().unwrap();
        assert!((e.corrector_bound(p.growth.m) - 3.0 * 2.0 * 2.0 * PI).abs() < 1e-12);
        assert!(p.eval_lagrangian(&[-PI / 2.0], &[0.0]).unwrap() - 1.0 < 1e-15);
    }
}
