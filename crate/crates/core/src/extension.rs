//! Compactification of cone-controlled problems.
//!
//! For `Phi in {f, l}` the extended data on `R_+ x A` is
//!
//! ```text
//! Phi_bar(x, w0, w) = w0^q Phi(x, w / w0)   if w0 > 0
//!                   = Phi_inf(x, w)         if w0 = 0
//! ```
//!
//! and is positively homogeneous of degree `q`. Restricted to the sphere
//! `S(A) = {w0^q + |w|^q = 1}` it gives a compact control problem in a new
//! time `s`, related to physical time by `dt/ds = w0^q`. Pieces with
//! `w0 = 0` take no physical time and produce jumps.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::problem::ControlProblem;
use crate::trajectories::{rk4_piecewise, Path};

/// `w0` below this fraction of `|w|` is treated as exactly zero.
pub const W0_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedControlPoint {
    pub w0: f64,
    pub w: Vec<f64>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

impl ExtendedControlPoint {
    /// Point of `S(A)` with the given `w`; `w0` is completed from `|w| <= 1`.
    pub fn from_w(w: Vec<f64>, q: u32) -> Result<Self> {
        let r = norm(&w);
        if r > 1.0 + 1e-12 {
            return Err(Error::Domain(format!("|w| = {r} exceeds 1")));
        }
        let w0 = (1.0 - r.min(1.0).powi(q as i32))
            .max(0.0)
            .powf(1.0 / q as f64);
        Ok(ExtendedControlPoint { w0, w })
    }

    /// Image of an ordinary control: `w = a / (1 + |a|^q)^(1/q)`,
    /// `w0 = (1 + |a|^q)^(-1/q)`.
    pub fn from_ordinary(a: &[f64], q: u32) -> Self {
        let scale = (1.0 + norm(a).powi(q as i32)).powf(1.0 / q as f64);
        ExtendedControlPoint {
            w0: 1.0 / scale,
            w: a.iter().map(|v| v / scale).collect(),
        }
    }

    /// `w / w0`, or `None` on the jump part `w0 = 0`.
    pub fn to_ordinary(&self) -> Option<Vec<f64>> {
        if self.w0 <= W0_EPS * norm(&self.w).max(f64::MIN_POSITIVE) {
            None
        } else {
            Some(self.w.iter().map(|v| v / self.w0).collect())
        }
    }

    /// Distance of `w0^q + |w|^q` from 1.
    pub fn sphere_defect(&self, q: u32) -> f64 {
        (self.w0.powi(q as i32) + norm(&self.w).powi(q as i32) - 1.0).abs()
    }

    pub fn time_rate(&self, q: u32) -> f64 {
        self.w0.powi(q as i32)
    }
}

/// A cone-controlled problem together with its compactified data.
#[derive(Debug, Clone)]
pub struct ExtendedProblem {
    pub base: ControlProblem,
    pub q: u32,
}

/// Builds the extended problem. Recession functions are probed on the unit
/// directions of the cone at the origin so that an undefined recession is
/// reported here rather than in the middle of a solve.
pub fn extend(problem: &ControlProblem) -> Result<ExtendedProblem> {
    if problem.control_set.is_compact() {
        return Err(Error::Precondition(
            "extension applies to cone control sets; compact problems are used directly".into(),
        ));
    }
    let x0 = vec![0.0; problem.state_dim];
    for d in crate::problem::sphere_directions(&problem.control_set, 3) {
        problem.dynamics_recession_at(&x0, &d)?;
        problem.lagrangian_recession_at(&x0, &d)?;
    }
    Ok(ExtendedProblem {
        base: problem.clone(),
        q: problem.growth.q,
    })
}

impl ExtendedProblem {
    fn is_jump(w0: f64, w: &[f64]) -> bool {
        w0 <= W0_EPS * norm(w)
    }

    fn check(&self, w0: f64, w: &[f64]) -> Result<()> {
        if !(w0 >= 0.0) || w.len() != self.base.control_dim() {
            return Err(Error::Domain(format!(
                "invalid extended control ({w0}, {w:?})"
            )));
        }
        Ok(())
    }

    /// `f_bar(x, w0, w)`.
    pub fn f_bar(&self, x: &[f64], w0: f64, w: &[f64]) -> Result<Vec<f64>> {
        self.check(w0, w)?;
        if w0 == 0.0 && w.iter().all(|&v| v == 0.0) {
            return Ok(vec![0.0; self.base.state_dim]);
        }
        if Self::is_jump(w0, w) {
            return self.base.dynamics_recession_at(x, w);
        }
        let a: Vec<f64> = w.iter().map(|v| v / w0).collect();
        if !self.base.control_set.contains(&a) {
            return Err(Error::Domain(format!(
                "w = {w:?} is not in the control cone"
            )));
        }
        let scale = w0.powi(self.q as i32);
        Ok(self
            .base
            .dynamics_unchecked(x, &a)?
            .into_iter()
            .map(|v| v * scale)
            .collect())
    }

    /// `l_bar(x, w0, w)`.
    pub fn l_bar(&self, x: &[f64], w0: f64, w: &[f64]) -> Result<f64> {
        self.check(w0, w)?;
        if w0 == 0.0 && w.iter().all(|&v| v == 0.0) {
            return Ok(0.0);
        }
        if Self::is_jump(w0, w) {
            return self.base.lagrangian_recession_at(x, w);
        }
        let a: Vec<f64> = w.iter().map(|v| v / w0).collect();
        if !self.base.control_set.contains(&a) {
            return Err(Error::Domain(format!(
                "w = {w:?} is not in the control cone"
            )));
        }
        Ok(w0.powi(self.q as i32) * self.base.lagrangian_unchecked(x, &a)?)
    }

    pub fn f_bar_at(&self, x: &[f64], c: &ExtendedControlPoint) -> Result<Vec<f64>> {
        self.f_bar(x, c.w0, &c.w)
    }

    pub fn l_bar_at(&self, x: &[f64], c: &ExtendedControlPoint) -> Result<f64> {
        self.l_bar(x, c.w0, &c.w)
    }
}

/// Piecewise-constant control: `values[i]` on `[breakpoints[i], breakpoints[i+1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedControl {
    pub breakpoints: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl TimedControl {
    pub fn new(breakpoints: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.is_empty() || breakpoints.len() != values.len() + 1 {
            return Err(Error::Config(format!(
                "timed control needs k >= 1 values and k + 1 breakpoints (got {} and {})",
                values.len(),
                breakpoints.len()
            )));
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) || !breakpoints[0].is_finite() {
            return Err(Error::Config(
                "breakpoints must be finite and strictly increasing".into(),
            ));
        }
        let dim = values[0].len();
        if values
            .iter()
            .any(|v| v.len() != dim || v.iter().any(|c| !c.is_finite()))
        {
            return Err(Error::Config(
                "control values must be finite and of one dimension".into(),
            ));
        }
        Ok(TimedControl {
            breakpoints,
            values,
        })
    }

    pub fn constant(value: Vec<f64>, horizon: f64) -> Result<Self> {
        Self::new(vec![0.0, horizon], vec![value])
    }

    pub fn start(&self) -> f64 {
        self.breakpoints[0]
    }

    pub fn end(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    /// Value at `t`, right-continuous; the last piece extends to the end.
    pub fn value_at(&self, t: f64) -> &[f64] {
        let k = self.breakpoints.partition_point(|&b| b <= t);
        &self.values[k.saturating_sub(1).min(self.values.len() - 1)]
    }

    /// CSV with rows `breakpoint,value...`; the closing breakpoint is a row
    /// with no values.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        let dim = self.values[0].len();
        let header: Vec<String> = (1..=dim).map(|i| format!("value{i}")).collect();
        writeln!(out, "breakpoint,{}", header.join(","))?;
        for (b, v) in self.breakpoints.iter().zip(&self.values) {
            let vals: Vec<String> = v.iter().map(|c| format!("{c:?}")).collect();
            writeln!(out, "{b:?},{}", vals.join(","))?;
        }
        writeln!(out, "{:?}", self.end())?;
        Ok(())
    }

    pub fn read_csv(input: impl BufRead) -> Result<Self> {
        let mut breakpoints = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if lineno == 0 || line.is_empty() {
                continue;
            }
            let mut cells = line.split(',').map(str::trim).filter(|c| !c.is_empty());
            let parse = |c: &str| {
                c.parse::<f64>().map_err(|_| {
                    Error::parse(format!("line {}", lineno + 1), format!("bad number `{c}`"))
                })
            };
            let b = parse(cells.next().unwrap_or_default())?;
            let row: Vec<f64> = cells.map(parse).collect::<Result<_>>()?;
            breakpoints.push(b);
            if !row.is_empty() {
                values.push(row);
            }
        }
        Self::new(breakpoints, values)
    }
}

/// Sampled monotone time change between physical time `t` and extended
/// time `s`: `t[k]` and `s[k]` are both nondecreasing and `s` is strictly
/// increasing. Between samples the map is linear.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeMap {
    pub t: Vec<f64>,
    pub s: Vec<f64>,
}

impl TimeMap {
    /// `t(s)` by linear interpolation, clamped to the sampled range.
    pub fn t_at(&self, s: f64) -> f64 {
        interp_monotone(&self.s, &self.t, s, false)
    }

    /// Right inverse `s(t) = sup { s : t(s) <= t }`: at a jump time this
    /// returns the end of the jump, so `xi(s(t))` is right-continuous.
    pub fn s_at(&self, t: f64) -> f64 {
        interp_monotone(&self.t, &self.s, t, true)
    }
}

/// Linear interpolation along nondecreasing `xs`. On flat stretches of
/// `xs`, `rightmost` selects the last sample with `xs[k] <= x`.
fn interp_monotone(xs: &[f64], ys: &[f64], x: f64, rightmost: bool) -> f64 {
    let n = xs.len();
    if x <= xs[0] && !(rightmost && x == xs[0]) {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let k = if rightmost {
        xs.partition_point(|&v| v <= x) - 1
    } else {
        xs.partition_point(|&v| v < x).max(1) - 1
    };
    if k + 1 >= n || xs[k + 1] == xs[k] {
        return ys[k.min(n - 1)];
    }
    let theta = (x - xs[k]) / (xs[k + 1] - xs[k]);
    ys[k] + theta * (ys[k + 1] - ys[k])
}

/// Maps an ordinary piecewise-constant control to its extended
/// representation. Per piece with value `a`, `ds/dt = 1 + |a|^q`.
pub fn ordinary_to_extended(
    alpha: &TimedControl,
    problem: &ControlProblem,
) -> Result<(TimedControl, TimeMap)> {
    let q = problem.growth.q;
    for a in &alpha.values {
        if !problem.control_set.contains(a) {
            return Err(Error::Domain(format!("control value {a:?} is not in A")));
        }
    }
    let mut s = vec![alpha.start()];
    let mut values = Vec::with_capacity(alpha.values.len());
    for (k, a) in alpha.values.iter().enumerate() {
        let dt = alpha.breakpoints[k + 1] - alpha.breakpoints[k];
        s.push(s[k] + (1.0 + norm(a).powi(q as i32)) * dt);
        let p = ExtendedControlPoint::from_ordinary(a, q);
        let mut v = vec![p.w0];
        v.extend(p.w);
        values.push(v);
    }
    let map = TimeMap {
        t: alpha.breakpoints.clone(),
        s: s.clone(),
    };
    Ok((TimedControl::new(s, values)?, map))
}

/// Splits an extended control value row `[w0, w...]`.
fn split_extended(v: &[f64]) -> (f64, &[f64]) {
    (v[0], &v[1..])
}

/// Inverse of [`ordinary_to_extended`]: `dt/ds = w0^q`, `alpha = w / w0`.
/// Pieces with `w0 = 0` have no ordinary counterpart and are rejected.
pub fn extended_to_ordinary(
    w: &TimedControl,
    problem: &ControlProblem,
) -> Result<(TimedControl, TimeMap)> {
    let q = problem.growth.q as i32;
    let mut t = vec![w.start()];
    let mut values = Vec::with_capacity(w.values.len());
    for (k, v) in w.values.iter().enumerate() {
        let (w0, wv) = split_extended(v);
        if wv.len() != problem.control_dim() || !(w0 >= 0.0) {
            return Err(Error::Domain(format!(
                "invalid extended control value {v:?}"
            )));
        }
        if w0 <= W0_EPS * norm(wv).max(f64::MIN_POSITIVE) {
            return Err(Error::NonInvertibleTime(format!(
                "w0 = 0 on [{}, {}): the ordinary time does not advance there",
                w.breakpoints[k],
                w.breakpoints[k + 1]
            )));
        }
        let ds = w.breakpoints[k + 1] - w.breakpoints[k];
        t.push(t[k] + w0.powi(q) * ds);
        values.push(wv.iter().map(|c| c / w0).collect());
    }
    let map = TimeMap {
        t: t.clone(),
        s: w.breakpoints.clone(),
    };
    Ok((TimedControl::new(t, values)?, map))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Jump {
    /// Physical time of the jump.
    pub t: f64,
    pub s_start: f64,
    pub s_end: f64,
    pub from: Vec<f64>,
    pub to: Vec<f64>,
}

/// Extended trajectory `xi(s)` with its physical clock, and the generalized
/// ordinary-time trajectory `y(t) = xi(s(t))` (right inverse).
#[derive(Debug, Clone)]
pub struct GeneralizedTrajectory {
    /// Samples in `s`; `path.cost` is the extended payoff.
    pub path: Path,
    /// `t(s)` at the same samples.
    pub clock: Vec<f64>,
    pub jumps: Vec<Jump>,
}

impl GeneralizedTrajectory {
    pub fn time_map(&self) -> TimeMap {
        TimeMap {
            t: self.clock.clone(),
            s: self.path.times.clone(),
        }
    }

    /// `xi(s)` by linear interpolation between samples.
    pub fn xi_at(&self, s: f64) -> Vec<f64> {
        let n = self.path.states[0].len();
        (0..n)
            .map(|i| {
                let ys: Vec<f64> = self.path.states.iter().map(|x| x[i]).collect();
                interp_monotone(&self.path.times, &ys, s, false)
            })
            .collect()
    }

    /// `y(t) = xi(s(t))`.
    pub fn y_at(&self, t: f64) -> Vec<f64> {
        self.xi_at(self.time_map().s_at(t))
    }

    /// Extended payoff accumulated up to `s`.
    pub fn cost_at(&self, s: f64) -> f64 {
        interp_monotone(&self.path.times, &self.path.cost, s, false)
    }
}

/// Integrates `xi' = f_bar(xi, w0, w)`, `cost' = l_bar`, `t' = w0^q` with
/// RK4 in `s` over `[0, horizon_s]`. A piece with `w0 = 0` whose endpoint
/// displacement exceeds `jump_tol` is reported as a jump.
pub fn generalized_trajectory(
    x: &[f64],
    w: &TimedControl,
    ext: &ExtendedProblem,
    horizon_s: f64,
    ds: f64,
    jump_tol: f64,
) -> Result<GeneralizedTrajectory> {
    let q = ext.q as i32;
    let path = rk4_piecewise(x, w, horizon_s, ds, |y, v| {
        let (w0, wv) = split_extended(v);
        Ok((ext.f_bar(y, w0, wv)?, ext.l_bar(y, w0, wv)?))
    })?;
    let mut clock = Vec::with_capacity(path.times.len());
    for &s in &path.times {
        // t(s) is piecewise linear with slope w0^q, exact per piece.
        let mut t = 0.0;
        for (k, v) in w.values.iter().enumerate() {
            let (a, b) = (w.breakpoints[k], w.breakpoints[k + 1]);
            if s <= a {
                break;
            }
            t += v[0].powi(q) * (s.min(b) - a);
        }
        clock.push(t);
    }
    let mut jumps = Vec::new();
    for (k, v) in w.values.iter().enumerate() {
        let (w0, wv) = split_extended(v);
        if w0 > W0_EPS * norm(wv) {
            continue;
        }
        let (a, b) = (
            w.breakpoints[k].max(0.0),
            w.breakpoints[k + 1].min(horizon_s),
        );
        if a >= b {
            continue;
        }
        let ia = path
            .times
            .partition_point(|&s| s < a - 1e-12)
            .min(path.times.len() - 1);
        let ib = path
            .times
            .partition_point(|&s| s < b - 1e-12)
            .min(path.times.len() - 1);
        let (from, to) = (path.states[ia].clone(), path.states[ib].clone());
        let disp: f64 = from
            .iter()
            .zip(&to)
            .map(|(p, r)| (p - r) * (p - r))
            .sum::<f64>()
            .sqrt();
        if disp > jump_tol {
            jumps.push(Jump {
                t: clock[ia],
                s_start: a,
                s_end: b,
                from,
                to,
            });
        }
    }
    Ok(GeneralizedTrajectory { path, clock, jumps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::builtin;

    #[test]
    fn worked_example_extended_data() {
        let ext = extend(&builtin("example-3-3").unwrap()).unwrap();
        let x = [0.5, -2.0];
        for &(w0, w) in &[
            (1.0, 0.0),
            (0.5, 0.5),
            (0.0, 1.0),
            (0.0, -1.0),
            (0.25, -0.75),
        ] {
            let f = ext.f_bar(&x, w0, &[w]).unwrap();
            assert!((f[0] - w).abs() < 1e-15);
            assert!((f[1] - 2.5 * w0).abs() < 1e-15);
            let l = ext.l_bar(&x, w0, &[w]).unwrap();
            assert!((l - (4.25 * w0 + w.abs())).abs() < 1e-14);
        }
        let lqr = builtin("lqr-1d").unwrap();
        let ext = extend(&lqr).unwrap();
        assert_eq!(
            ext.f_bar(&[1.3], 1.0, &[0.0]).unwrap(),
            lqr.eval_dynamics(&[1.3], &[0.0]).unwrap()
        );
        assert_eq!(
            ext.l_bar(&[1.3], 1.0, &[0.0]).unwrap(),
            lqr.eval_lagrangian(&[1.3], &[0.0]).unwrap()
        );
        assert!(extend(&builtin("example-4-1").unwrap()).is_err());
    }

    #[test]
    fn constant_control_time_change() {
        let p = builtin("example-3-3").unwrap();
        let c = 3.0;
        let alpha = TimedControl::constant(vec![c], 2.0).unwrap();
        let (w, map) = ordinary_to_extended(&alpha, &p).unwrap();
        assert_eq!(w.breakpoints, vec![0.0, 8.0]);
        assert!((w.values[0][0] - 0.25).abs() < 1e-15);
        assert!((w.values[0][1] - 0.75).abs() < 1e-15);
        assert!((map.s_at(1.0) - 4.0).abs() < 1e-15);

        let rest = TimedControl::constant(vec![0.0], 5.0).unwrap();
        let (w, map) = ordinary_to_extended(&rest, &p).unwrap();
        assert_eq!(w.values[0], vec![1.0, 0.0]);
        assert_eq!(map.s_at(3.0), 3.0);
    }

    #[test]
    fn extended_to_ordinary_examples() {
        let p = builtin("example-3-3").unwrap();
        let half = TimedControl::constant(vec![0.5, 0.5], 4.0).unwrap();
        let (alpha, map) = extended_to_ordinary(&half, &p).unwrap();
        assert_eq!(alpha.values[0], vec![1.0]);
        assert_eq!(map.t_at(4.0), 2.0);
        assert_eq!(map.t_at(1.0), 0.5);

        let rest = TimedControl::constant(vec![1.0, 0.0], 3.0).unwrap();
        let (alpha, map) = extended_to_ordinary(&rest, &p).unwrap();
        assert_eq!(alpha.values[0], vec![0.0]);
        assert_eq!(map.t_at(2.0), 2.0);

        let jump =
            TimedControl::new(vec![0.0, 1.0, 2.0], vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(matches!(
            extended_to_ordinary(&jump, &p),
            Err(Error::NonInvertibleTime(_))
        ));
    }

    #[test]
    fn round_trip_reproduces_control() {
        let p = builtin("lqr-1d").unwrap();
        let alpha = TimedControl::new(
            vec![0.0, 0.3, 1.0, 1.7],
            vec![vec![-2.0], vec![0.0], vec![0.75]],
        )
        .unwrap();
        let (w, _) = ordinary_to_extended(&alpha, &p).unwrap();
        for v in &w.values {
            let pt = ExtendedControlPoint {
                w0: v[0],
                w: v[1..].to_vec(),
            };
            assert!(pt.sphere_defect(2) < 1e-12);
        }
        let (back, _) = extended_to_ordinary(&w, &p).unwrap();
        for (a, b) in back.breakpoints.iter().zip(&alpha.breakpoints) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in back.values.iter().zip(&alpha.values) {
            assert!((a[0] - b[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn right_inverse_picks_end_of_jump() {
        let map = TimeMap {
            t: vec![0.0, 1.0, 1.0, 2.0],
            s: vec![0.0, 1.0, 3.0, 4.0],
        };
        assert_eq!(map.s_at(1.0), 3.0);
        assert_eq!(map.s_at(0.5), 0.5);
        assert_eq!(map.s_at(1.5), 3.5);
        assert_eq!(map.t_at(2.0), 1.0);
    }

    #[test]
    fn jump_to_the_origin_costs_one() {
        let ext = extend(&builtin("example-3-3").unwrap()).unwrap();
        let w =
            TimedControl::new(vec![0.0, 1.0, 3.0], vec![vec![0.0, -1.0], vec![1.0, 0.0]]).unwrap();
        let g = generalized_trajectory(&[1.0, 0.0], &w, &ext, 3.0, 1e-3, 1e-6).unwrap();
        let xi1 = g.xi_at(1.0);
        assert!(xi1[0].abs() < 1e-12 && xi1[1].abs() < 1e-12, "{xi1:?}");
        let end = g.path.states.last().unwrap();
        assert!(end[0].abs() < 1e-12 && end[1].abs() < 1e-12);
        assert!((g.path.cost.last().unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(g.jumps.len(), 1);
        assert_eq!(g.jumps[0].t, 0.0);
        // After the jump the generalized trajectory sits at the origin.
        assert!(g.y_at(0.0)[0].abs() < 1e-12);
        assert!(g.y_at(1.5)[0].abs() < 1e-12);
    }

    #[test]
    fn no_jumps_without_w0_zero() {
        let ext = extend(&builtin("lqr-1d").unwrap()).unwrap();
        let w = TimedControl::constant(vec![1.0, 0.0], 2.0).unwrap();
        let g = generalized_trajectory(&[0.7], &w, &ext, 2.0, 1e-2, 1e-6).unwrap();
        assert!(g.jumps.is_empty());
        assert!((g.y_at(1.3)[0] - 0.7).abs() < 1e-12);
        // q > p: a w0 = 0 piece moves nothing.
        let w = TimedControl::constant(vec![0.0, 1.0], 2.0).unwrap();
        let g = generalized_trajectory(&[0.7], &w, &ext, 2.0, 1e-2, 1e-9).unwrap();
        assert!(g.jumps.is_empty());
        assert_eq!(g.path.states.last().unwrap()[0], 0.7);
    }

    #[test]
    fn timed_control_csv_round_trip() {
        let c =
            TimedControl::new(vec![0.0, 0.5, 2.0], vec![vec![1.0, -0.25], vec![0.0, 3.0]]).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let back = TimedControl::read_csv(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back, c);
        assert_eq!(c.value_at(0.7), &[0.0, 3.0]);
        assert_eq!(c.value_at(0.5), &[0.0, 3.0]);
        assert_eq!(c.value_at(5.0), &[0.0, 3.0]);
        assert!(TimedControl::new(vec![0.0, 0.0], vec![vec![1.0]]).is_err());
    }
}
