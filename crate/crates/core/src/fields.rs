//! Rectangular grids and nodal value fields with an explicit infinite state.
//!
//! Infinite node values are stored as `f64::INFINITY`, which already has
//! the required arithmetic (`inf + c = inf`, `min(inf, c) = c`). The
//! [`Value`] enum is the tagged view handed to callers.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One grid axis. A non-periodic axis has `nodes` points from `min` to `max`
/// inclusive; a periodic axis has `nodes` points `min + i h`, `h = (max -
/// min) / nodes`, with `max` identified with `min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub nodes: usize,
    #[serde(default)]
    pub periodic: bool,
}

impl Axis {
    pub fn new(min: f64, max: f64, nodes: usize) -> Self {
        Axis {
            min,
            max,
            nodes,
            periodic: false,
        }
    }

    pub fn periodic(min: f64, max: f64, nodes: usize) -> Self {
        Axis {
            min,
            max,
            nodes,
            periodic: true,
        }
    }

    pub fn spacing(&self) -> f64 {
        if self.periodic {
            (self.max - self.min) / self.nodes as f64
        } else {
            (self.max - self.min) / (self.nodes - 1) as f64
        }
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        if !self.periodic && i + 1 == self.nodes {
            self.max
        } else {
            self.min + i as f64 * self.spacing()
        }
    }

    pub fn period(&self) -> f64 {
        self.max - self.min
    }

    fn validate(&self) -> Result<()> {
        if self.nodes < 2
            || !(self.min < self.max)
            || !self.min.is_finite()
            || !self.max.is_finite()
        {
            return Err(Error::Config(format!(
                "axis [{}, {}] with {} nodes: need min < max and at least 2 nodes",
                self.min, self.max, self.nodes
            )));
        }
        Ok(())
    }

    /// Cell index and fractional offset of `x`. Non-periodic axes either
    /// clamp (`clamp = true`) or reject points outside `[min, max]`.
    fn locate(&self, x: f64, clamp: bool) -> Option<(usize, usize, f64)> {
        let h = self.spacing();
        if self.periodic {
            let period = self.period();
            let mut r = (x - self.min).rem_euclid(period);
            if r >= period {
                r = 0.0;
            }
            let pos = r / h;
            let i = (pos.floor() as usize).min(self.nodes - 1);
            let theta = (pos - i as f64).clamp(0.0, 1.0);
            return Some((i, (i + 1) % self.nodes, theta));
        }
        let slack = 1e-12 * h;
        let x = if clamp {
            x.clamp(self.min, self.max)
        } else if x < self.min - slack || x > self.max + slack || x.is_nan() {
            return None;
        } else {
            x.clamp(self.min, self.max)
        };
        let pos = (x - self.min) / h;
        let i = (pos.floor() as usize).min(self.nodes - 2);
        let theta = (pos - i as f64).clamp(0.0, 1.0);
        Some((i, i + 1, theta))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub axes: Vec<Axis>,
}

/// Interpolation stencil: node indices with multilinear weights. Zero
/// weights are dropped, so a node that does not influence the result is
/// never read.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    pub nodes: Vec<usize>,
    pub weights: Vec<f64>,
    /// Whether a non-periodic coordinate had to be clamped into the box.
    pub clamped: bool,
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::Config("grid needs at least one axis".into()));
        }
        for a in &axes {
            a.validate()?;
        }
        Ok(Grid { axes })
    }

    /// Parses `min:max:nodes[:periodic]` per axis, axes separated by commas.
    pub fn parse(spec: &str) -> Result<Self> {
        let axes = spec
            .split(',')
            .map(|part| {
                let fields: Vec<&str> = part.trim().split(':').collect();
                let bad = || {
                    Error::Config(format!(
                        "bad grid axis `{part}` (expected min:max:nodes[:periodic])"
                    ))
                };
                if fields.len() < 3 || fields.len() > 4 {
                    return Err(bad());
                }
                let min: f64 = fields[0].trim().parse().map_err(|_| bad())?;
                let max: f64 = fields[1].trim().parse().map_err(|_| bad())?;
                let nodes: usize = fields[2].trim().parse().map_err(|_| bad())?;
                let periodic = match fields.get(3).map(|s| s.trim()) {
                    None => false,
                    Some("periodic") | Some("p") => true,
                    Some(_) => return Err(bad()),
                };
                Ok(Axis {
                    min,
                    max,
                    nodes,
                    periodic,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Grid::new(axes)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.nodes).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Multi-index of a flat node index (first axis fastest).
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        self.axes
            .iter()
            .map(|a| {
                let i = flat % a.nodes;
                flat /= a.nodes;
                i
            })
            .collect()
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        let mut flat = 0;
        for (a, &i) in self.axes.iter().zip(multi).rev() {
            flat = flat * a.nodes + i;
        }
        flat
    }

    pub fn node(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .zip(&self.axes)
            .map(|(&i, a)| a.coordinate(i))
            .collect()
    }

    pub fn spacing(&self) -> Vec<f64> {
        self.axes.iter().map(Axis::spacing).collect()
    }

    pub fn min_spacing(&self) -> f64 {
        self.axes
            .iter()
            .map(Axis::spacing)
            .fold(f64::INFINITY, f64::min)
    }

    /// True when the node is at least `layers` nodes away from every
    /// non-periodic boundary.
    pub fn is_interior(&self, flat: usize, layers: usize) -> bool {
        self.multi_index(flat)
            .iter()
            .zip(&self.axes)
            .all(|(&i, a)| a.periodic || (i >= layers && i + layers < a.nodes))
    }

    /// Nodes within the central fraction `frac` of each non-periodic axis
    /// (`frac = 0.5` is the inner half).
    pub fn inner_nodes(&self, frac: f64) -> Vec<usize> {
        (0..self.len())
            .filter(|&k| {
                self.node(k).iter().zip(&self.axes).all(|(&x, a)| {
                    if a.periodic {
                        return true;
                    }
                    let c = 0.5 * (a.min + a.max);
                    let half = 0.5 * (a.max - a.min) * frac;
                    (x - c).abs() <= half * (1.0 + 1e-12)
                })
            })
            .collect()
    }

    /// Multilinear stencil at `x`. Non-periodic coordinates outside the box
    /// are clamped to it when `clamp` is set, otherwise rejected.
    pub fn stencil(&self, x: &[f64], clamp: bool) -> Result<Stencil> {
        if x.len() != self.dim() {
            return Err(Error::Domain(format!(
                "point has dimension {}, grid has {}",
                x.len(),
                self.dim()
            )));
        }
        let mut cells = Vec::with_capacity(self.dim());
        let mut clamped = false;
        for (a, &xi) in self.axes.iter().zip(x) {
            if !a.periodic && (xi < a.min || xi > a.max) {
                clamped = true;
            }
            match a.locate(xi, clamp) {
                Some(c) => cells.push(c),
                None => return Err(Error::OutOfDomain(x.to_vec())),
            }
        }
        let mut nodes = vec![0usize];
        let mut weights = vec![1.0];
        let mut stride = 1;
        for (a, &(lo, hi, theta)) in self.axes.iter().zip(&cells) {
            let mut next_nodes = Vec::with_capacity(nodes.len() * 2);
            let mut next_weights = Vec::with_capacity(nodes.len() * 2);
            for (&n, &w) in nodes.iter().zip(&weights) {
                if theta < 1.0 {
                    next_nodes.push(n + lo * stride);
                    next_weights.push(w * (1.0 - theta));
                }
                if theta > 0.0 {
                    next_nodes.push(n + hi * stride);
                    next_weights.push(w * theta);
                }
            }
            nodes = next_nodes;
            weights = next_weights;
            stride *= a.nodes;
        }
        Ok(Stencil {
            nodes,
            weights,
            clamped,
        })
    }
}

/// Tagged node value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Finite(f64),
    Infinite,
}

impl Value {
    pub fn from_f64(v: f64) -> Self {
        if v == f64::INFINITY {
            Value::Infinite
        } else {
            Value::Finite(v)
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Value::Finite(v) => v,
            Value::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Value::Infinite)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Value::Finite(v) => Some(v),
            Value::Infinite => None,
        }
    }
}

/// Values at the nodes of a grid. Value functions are nonnegative; signed
/// fields (correctors) are allowed as long as no value is NaN or `-inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl ValueField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Config(format!(
                "field has {} values for {} grid nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(k) = values
            .iter()
            .position(|v| v.is_nan() || *v == f64::NEG_INFINITY)
        {
            return Err(Error::Config(format!(
                "invalid value {} at node {k}",
                values[k]
            )));
        }
        Ok(ValueField { grid, values })
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        let n = grid.len();
        ValueField {
            grid,
            values: vec![c; n],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len()).map(|k| f(&grid.node(k))).collect();
        ValueField { grid, values }
    }

    pub fn get(&self, k: usize) -> Value {
        Value::from_f64(self.values[k])
    }

    /// Multilinear interpolation; infinite if any contributing node is.
    pub fn interpolate(&self, x: &[f64]) -> Result<Value> {
        let s = self.grid.stencil(x, false)?;
        let mut acc = 0.0;
        for (&n, &w) in s.nodes.iter().zip(&s.weights) {
            acc += w * self.values[n];
        }
        Ok(Value::from_f64(acc))
    }

    /// `(max |a - b|` over nodes finite in both, number of nodes where
    /// exactly one is infinite`)`.
    pub fn sup_diff(&self, other: &ValueField) -> Result<(f64, usize)> {
        self.sup_diff_on(other, 0..self.values.len())
    }

    /// [`Self::sup_diff`] restricted to the given nodes.
    pub fn sup_diff_on(
        &self,
        other: &ValueField,
        nodes: impl IntoIterator<Item = usize>,
    ) -> Result<(f64, usize)> {
        if self.grid != other.grid {
            return Err(Error::Config("fields live on different grids".into()));
        }
        let mut sup = 0.0f64;
        let mut disagreements = 0;
        for k in nodes {
            let (a, b) = (self.values[k], other.values[k]);
            match (a.is_infinite(), b.is_infinite()) {
                (false, false) => sup = sup.max((a - b).abs()),
                (true, true) => {}
                _ => disagreements += 1,
            }
        }
        Ok((sup, disagreements))
    }

    /// Largest finite absolute value.
    pub fn finite_scale(&self) -> f64 {
        self.values
            .iter()
            .filter(|v| v.is_finite())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn infinite_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_infinite()).count()
    }

    /// CSV: a `# {json}` grid header line, a column header, then one row
    /// per node with coordinates and the value (`inf` for infinite).
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "# {}", serde_json::to_string(&self.grid)?)?;
        let mut header: Vec<String> = (1..=self.grid.dim()).map(|i| format!("x{i}")).collect();
        header.push("value".into());
        writeln!(out, "{}", header.join(","))?;
        for k in 0..self.values.len() {
            let mut row: Vec<String> = self.grid.node(k).iter().map(|c| format!("{c:?}")).collect();
            let v = self.values[k];
            row.push(if v.is_infinite() {
                "inf".into()
            } else {
                format!("{v:?}")
            });
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .and_then(|l| l.strip_prefix("# "))
            .ok_or_else(|| Error::parse("line 1", "missing `# {grid}` header"))?;
        let grid: Grid = serde_json::from_str(header)?;
        let grid = Grid::new(grid.axes)?;
        lines.next();
        let mut values = Vec::with_capacity(grid.len());
        for (i, line) in lines.enumerate() {
            let cell = line.rsplit(',').next().unwrap_or("").trim();
            let v = if cell == "inf" {
                f64::INFINITY
            } else {
                cell.parse::<f64>().map_err(|_| {
                    Error::parse(format!("line {}", i + 3), format!("bad value `{cell}`"))
                })?
            };
            values.push(v);
        }
        ValueField::new(grid, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> Grid {
        Grid::new(vec![Axis::new(0.0, 1.0, 2)]).unwrap()
    }

    #[test]
    fn interpolation_examples() {
        let f = ValueField::new(line(), vec![0.0, 1.0]).unwrap();
        assert_eq!(f.interpolate(&[0.25]).unwrap(), Value::Finite(0.25));
        assert_eq!(f.interpolate(&[1.0]).unwrap(), Value::Finite(1.0));
        assert!(matches!(f.interpolate(&[1.5]), Err(Error::OutOfDomain(_))));

        let g = Grid::parse("-1:1:5,0:2:3").unwrap();
        let c = ValueField::constant(g.clone(), 3.5);
        assert_eq!(c.interpolate(&[0.3, 1.7]).unwrap(), Value::Finite(3.5));
        let lin = ValueField::from_fn(g.clone(), |x| 2.0 * x[0] - x[1]);
        for k in 0..g.len() {
            let x = g.node(k);
            assert_eq!(
                lin.interpolate(&x).unwrap(),
                Value::Finite(2.0 * x[0] - x[1])
            );
        }
    }

    #[test]
    fn infinity_propagates_only_through_used_nodes() {
        let g = Grid::parse("0:2:3").unwrap();
        let f = ValueField::new(g, vec![1.0, 2.0, f64::INFINITY]).unwrap();
        assert_eq!(f.interpolate(&[1.0]).unwrap(), Value::Finite(2.0));
        assert_eq!(f.interpolate(&[0.5]).unwrap(), Value::Finite(1.5));
        assert_eq!(f.interpolate(&[1.5]).unwrap(), Value::Infinite);
    }

    #[test]
    fn sup_diff_examples() {
        let g = Grid::parse("0:1:4").unwrap();
        let a = ValueField::constant(g.clone(), 0.0);
        assert_eq!(a.sup_diff(&a).unwrap(), (0.0, 0));
        let b = ValueField::constant(g.clone(), 1.0);
        assert_eq!(a.sup_diff(&b).unwrap(), (1.0, 0));
        let c = ValueField::new(g, vec![0.5, f64::INFINITY, f64::INFINITY, 0.0]).unwrap();
        assert_eq!(a.sup_diff(&c).unwrap(), (0.5, 2));
        let other = ValueField::constant(line(), 0.0);
        assert!(a.sup_diff(&other).is_err());
    }

    #[test]
    fn periodic_wrapping_is_exact() {
        let g = Grid::new(vec![Axis::periodic(0.0, 4.0, 4)]).unwrap();
        let f = ValueField::new(g, vec![0.0, 1.0, 4.0, 9.0]).unwrap();
        // Dyadic offsets so that `x + period` is itself exact.
        for x in [0.0, 0.375, 1.0, 2.5, 3.5, 3.9990234375] {
            let v = f.interpolate(&[x]).unwrap();
            assert_eq!(f.interpolate(&[x + 4.0]).unwrap(), v);
            assert_eq!(f.interpolate(&[x - 8.0]).unwrap(), v);
        }
        // Between the last node and the wrapped first node.
        assert_eq!(f.interpolate(&[3.5]).unwrap(), Value::Finite(4.5));
    }

    #[test]
    fn grid_validation_and_indexing() {
        assert!(Grid::parse("0:1:1").is_err());
        assert!(Grid::parse("1:0:3").is_err());
        assert!(Grid::parse("0:1").is_err());
        let g = Grid::parse("0:1:3,0:2:5").unwrap();
        assert_eq!(g.len(), 15);
        for k in 0..g.len() {
            assert_eq!(g.flat_index(&g.multi_index(k)), k);
        }
        assert_eq!(g.node(4), vec![0.5, 0.5]);
        assert_eq!(g.node(7), vec![0.5, 1.0]);
        assert!(g.is_interior(4, 1));
        assert!(!g.is_interior(0, 1));
        assert_eq!(g.inner_nodes(0.5).len(), 3);
    }

    #[test]
    fn csv_round_trip() {
        let g = Grid::parse("-1:1:3").unwrap();
        let f = ValueField::new(g, vec![0.25, f64::INFINITY, 1.0]).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# {"));
        assert!(text.contains("0.0,inf"));
        assert_eq!(ValueField::read_csv(&text).unwrap(), f);
    }
}
