//! Closed-form reference values: discounted Riccati solutions for
//! `y' = a`, `l = x'Qx + a'Ra`, and the known answers of the built-in
//! examples.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::problem::builtins::default_lqr_matrices;
use crate::problem::BUILTIN_NAMES;

/// `P_delta = R (-delta + sqrt(delta^2 + 4 Q / R)) / 2`, the nonnegative
/// root of `P^2 / R + delta P - Q = 0`.
pub fn riccati_1d(q: f64, r: f64, delta: f64) -> Result<f64> {
    if !(r > 0.0) || !(q >= 0.0) || !(delta >= 0.0) {
        return Err(Error::Domain(format!(
            "need R > 0, Q >= 0 and delta >= 0 (Q = {q}, R = {r}, delta = {delta})"
        )));
    }
    // Rationalized form avoids cancellation when delta^2 dominates Q / R.
    let disc = (delta * delta + 4.0 * q / r).sqrt();
    Ok(2.0 * q / (delta + disc))
}

/// Symmetric `P >= 0` solving `P R^{-1} P + delta P - Q = 0`.
///
/// With `S = R^{-1/2}` and `M = S Q S` the equation becomes
/// `X^2 + delta X - M = 0` for `X = S P S`, solved on the eigenbasis of `M`.
pub fn riccati_matrix(q: &DMatrix<f64>, r: &DMatrix<f64>, delta: f64) -> Result<DMatrix<f64>> {
    let n = q.nrows();
    if q.ncols() != n || r.nrows() != n || r.ncols() != n {
        return Err(Error::Domain("Q and R must be square of equal size".into()));
    }
    if !(delta >= 0.0) {
        return Err(Error::Domain(format!(
            "delta must be nonnegative, got {delta}"
        )));
    }
    let scale = q.amax().max(r.amax()).max(1.0);
    if (q - q.transpose()).amax() > 1e-12 * scale || (r - r.transpose()).amax() > 1e-12 * scale {
        return Err(Error::Domain("Q and R must be symmetric".into()));
    }
    if Cholesky::new(r.clone()).is_none() {
        return Err(Error::Domain("R is not positive definite".into()));
    }
    let r_eig = SymmetricEigen::new(r.clone());
    let s = &r_eig.eigenvectors
        * DMatrix::from_diagonal(&r_eig.eigenvalues.map(|v| 1.0 / v.sqrt()))
        * r_eig.eigenvectors.transpose();
    let s_inv = &r_eig.eigenvectors
        * DMatrix::from_diagonal(&r_eig.eigenvalues.map(f64::sqrt))
        * r_eig.eigenvectors.transpose();
    let m = &s * q * &s;
    let m = (&m + m.transpose()) * 0.5;
    let m_eig = SymmetricEigen::new(m);
    if m_eig.eigenvalues.min() < -1e-12 * scale {
        return Err(Error::Domain("Q is not positive semidefinite".into()));
    }
    let roots = m_eig.eigenvalues.map(|mu| {
        let mu = mu.max(0.0);
        2.0 * mu / (delta + (delta * delta + 4.0 * mu).sqrt()).max(f64::MIN_POSITIVE)
    });
    let x = &m_eig.eigenvectors * DMatrix::from_diagonal(&roots) * m_eig.eigenvectors.transpose();
    let p = &s_inv * x * &s_inv;
    Ok((&p + p.transpose()) * 0.5)
}

/// `x' P_delta x`.
pub fn riccati_value(q: &DMatrix<f64>, r: &DMatrix<f64>, delta: f64, x: &[f64]) -> Result<f64> {
    let p = riccati_matrix(q, r, delta)?;
    if x.len() != p.nrows() {
        return Err(Error::Domain(format!(
            "state has dimension {}, expected {}",
            x.len(),
            p.nrows()
        )));
    }
    let v = DVector::from_column_slice(x);
    Ok(v.dot(&(&p * &v)))
}

/// `max_a -p a - Q x^2 - R a^2 = p^2 / (4R) - Q x^2` for the scalar LQR
/// problem (maximizer `a = -p / (2R)`).
pub fn lqr_hamiltonian(q: f64, r: f64, x: f64, p: f64) -> f64 {
    p * p / (4.0 * r) - q * x * x
}

/// Bound `t^3 (1 + t^2) / n^2` on the payoff of the `n`-switch chattering
/// control from the origin of `example-4-1`.
pub fn chattering_bound(t: f64, n: usize) -> f64 {
    t.powi(3) * (1.0 + t * t) / (n * n) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "query", rename_all = "kebab-case")]
pub enum Query {
    /// Value of the compactified (extended) problem at a state.
    ExtendedValue {
        state: Vec<f64>,
    },
    /// Payoff of ordinary controls from a state by the given horizon.
    OrdinaryPayoff {
        state: Vec<f64>,
        horizon: f64,
    },
    /// `t -> infinity` limit of the finite-horizon value.
    LimitValue {
        state: Vec<f64>,
    },
    /// Payoff of `chattering_control(switches, horizon)` from a state.
    ChatteringPayoff {
        state: Vec<f64>,
        horizon: f64,
        switches: usize,
    },
    ErgodicConstant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Expected {
    AtMost { bound: f64 },
    Above { bound: f64 },
    Near { value: f64, tolerance: f64 },
}

impl Expected {
    pub fn check(&self, observed: f64) -> bool {
        match *self {
            Expected::AtMost { bound } => observed <= bound,
            Expected::Above { bound } => observed > bound,
            Expected::Near { value, tolerance } => (observed - value).abs() <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assertion {
    pub query: Query,
    pub expected: Expected,
}

fn assertion(query: Query, expected: Expected) -> Assertion {
    Assertion { query, expected }
}

/// Known answers for a built-in problem at its default parameters.
pub fn example_truth(name: &str) -> Result<Vec<Assertion>> {
    let out = match name {
        "example-3-3" => vec![
            // A single jump from (1, 0) to the origin costs 1.
            assertion(
                Query::ExtendedValue {
                    state: vec![1.0, 0.0],
                },
                Expected::AtMost { bound: 1.05 },
            ),
            // Ordinary controls cannot reach the target at finite cost.
            assertion(
                Query::OrdinaryPayoff {
                    state: vec![1.0, 0.0],
                    horizon: 20.0,
                },
                Expected::Above { bound: 100.0 },
            ),
        ],
        "example-4-1" => {
            let mut v = vec![assertion(
                Query::LimitValue {
                    state: vec![0.0, 0.0],
                },
                Expected::AtMost { bound: 1e-2 },
            )];
            for t in [1.0, 2.0] {
                for n in [4, 8, 16, 32] {
                    v.push(assertion(
                        Query::ChatteringPayoff {
                            state: vec![0.0, 0.0],
                            horizon: t,
                            switches: n,
                        },
                        Expected::AtMost {
                            bound: chattering_bound(t, n),
                        },
                    ));
                }
            }
            v
        }
        "lqr-1d" => [-1.0, -0.5, 0.5, 1.0]
            .iter()
            .map(|&x: &f64| {
                assertion(
                    Query::LimitValue { state: vec![x] },
                    Expected::Near {
                        value: x * x,
                        tolerance: 0.02 * (1.0 + x * x),
                    },
                )
            })
            .collect(),
        "lqr-nd" => {
            let (q, r) = default_lqr_matrices(2);
            [[0.5, 0.0], [0.0, -0.5], [0.5, 0.5]]
                .iter()
                .map(|x| {
                    let value = riccati_value(&q, &r, 0.0, x)?;
                    let norm2 = x[0] * x[0] + x[1] * x[1];
                    Ok(assertion(
                        Query::LimitValue { state: x.to_vec() },
                        Expected::Near {
                            value,
                            tolerance: 0.02 * (1.0 + norm2),
                        },
                    ))
                })
                .collect::<Result<Vec<_>>>()?
        }
        // Parking at the minimum of 2 + sin x with a = 0 costs 1 per unit time.
        "ergodic-torus-1d" => vec![assertion(
            Query::ErgodicConstant,
            Expected::Near {
                value: 1.0,
                tolerance: 0.05,
            },
        )],
        other => {
            debug_assert!(!BUILTIN_NAMES.contains(&other));
            return Err(Error::Lookup(other.to_string()));
        }
    };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_examples() {
        let p0 = riccati_1d(1.0, 1.0, 0.0).unwrap();
        assert_eq!(p0, 1.0);
        assert_eq!(p0 * 2.0 * 2.0, 4.0);
        let p3 = riccati_1d(1.0, 1.0, 3.0).unwrap();
        assert!((p3 - (-3.0 + 13f64.sqrt()) / 2.0).abs() < 1e-14);
        assert!((p3 - 0.30278).abs() < 1e-5);
        assert_eq!(riccati_1d(0.0, 2.0, 0.5).unwrap(), 0.0);
        assert!(riccati_1d(1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn scalar_residual_and_monotonicity() {
        for &(q, r) in &[(1.0, 1.0), (2.0, 0.5), (0.1, 7.0)] {
            // Decreasing discounts: P_delta is nondecreasing and tends to sqrt(QR).
            let mut prev = 0.0;
            for k in 0..40 {
                let delta = 10.0 * 0.7f64.powi(k);
                let p = riccati_1d(q, r, delta).unwrap();
                assert!((p * p / r + delta * p - q).abs() <= 1e-10);
                assert!(p >= prev);
                prev = p;
            }
            assert!((prev - (q * r).sqrt()).abs() < 1e-4 * (q * r).sqrt());
        }
    }

    #[test]
    fn matrix_solution_solves_the_equation() {
        let q = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 2.0]);
        let r = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 2.0]);
        for delta in [0.0, 0.1, 1.0, 5.0] {
            let p = riccati_matrix(&q, &r, delta).unwrap();
            let r_inv = r.clone().try_inverse().unwrap();
            let res = &p * r_inv * &p + &p * delta - &q;
            assert!(res.amax() < 1e-10, "delta {delta}: {res}");
            assert!(SymmetricEigen::new(p).eigenvalues.min() >= 0.0);
        }
        // Scalar case agrees with the closed form.
        let p = riccati_matrix(
            &DMatrix::from_element(1, 1, 2.0),
            &DMatrix::from_element(1, 1, 3.0),
            0.4,
        )
        .unwrap();
        assert!((p[(0, 0)] - riccati_1d(2.0, 3.0, 0.4).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn matrix_input_checks() {
        let q = DMatrix::identity(2, 2);
        let bad_r = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(
            riccati_matrix(&q, &bad_r, 0.0),
            Err(Error::Domain(_))
        ));
        let bad_q = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(riccati_matrix(&bad_q, &DMatrix::identity(2, 2), 0.0).is_err());
        assert_eq!(
            riccati_value(&DMatrix::zeros(2, 2), &q, 0.0, &[3.0, 4.0]).unwrap(),
            0.0
        );
        assert_eq!(riccati_value(&q, &q, 0.0, &[3.0, 4.0]).unwrap(), 25.0);
    }

    #[test]
    fn closed_form_hamiltonian() {
        // max over a of -p a - x^2 - a^2 at p = 2, x = 1: a = -1, value 0.
        assert_eq!(lqr_hamiltonian(1.0, 1.0, 1.0, 2.0), 0.0);
    }

    #[test]
    fn truths_exist_for_every_builtin() {
        for name in BUILTIN_NAMES {
            assert!(!example_truth(name).unwrap().is_empty(), "{name}");
        }
        assert!(matches!(example_truth("nope"), Err(Error::Lookup(_))));
        let e41 = example_truth("example-4-1").unwrap();
        assert_eq!(e41.len(), 9);
        assert!(e41.iter().any(|a| a.expected
            == Expected::AtMost {
                bound: 32.0 / 16.0 * 5.0 / 4.0
            }));
        assert!(Expected::Near {
            value: 1.0,
            tolerance: 0.1
        }
        .check(1.05));
        assert!(!Expected::Above { bound: 100.0 }.check(100.0));
    }
}
