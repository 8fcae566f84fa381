//! Piecewise-linear functions on an equispaced grid over `[0, 1]`.
//!
//! `GridFunction` is the finite-dimensional stand-in both for càdlàg sample
//! snapshots and for elements of the rate function's domain. The value at 0
//! is always exactly 0; evaluation between knots is the linear interpolant.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    values: Vec<f64>,
}

impl GridFunction {
    /// Knot values at `j/n`, `j = 0..=n`. Requires `values[0] == 0` and at
    /// least one segment.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidArgument(
                "grid function needs at least two knots".into(),
            ));
        }
        if values[0] != 0.0 {
            return Err(Error::InvalidArgument(format!(
                "grid function must vanish at 0, got {}",
                values[0]
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "grid function values must be finite".into(),
            ));
        }
        Ok(GridFunction { values })
    }

    pub fn zero(segments: usize) -> Self {
        GridFunction {
            values: vec![0.0; segments.max(1) + 1],
        }
    }

    /// Samples `f` at the knots `j/n`; `f(0)` must evaluate to 0.
    pub fn from_profile(segments: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let n = segments.max(1);
        let values = (0..=n).map(|j| f(j as f64 / n as f64)).collect();
        Self::new(values)
    }

    pub fn segments(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn knot(&self, j: usize) -> f64 {
        j as f64 / self.segments() as f64
    }

    /// Linear interpolant at `s ∈ [0, 1]` (clamped).
    pub fn eval(&self, s: f64) -> f64 {
        let n = self.segments() as f64;
        let x = (s.clamp(0.0, 1.0)) * n;
        let j = (x.floor() as usize).min(self.segments() - 1);
        let frac = x - j as f64;
        self.values[j] * (1.0 - frac) + self.values[j + 1] * frac
    }

    pub fn scaled(&self, c: f64) -> Self {
        GridFunction {
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Exact sup-norm distance between the two piecewise-linear functions
    /// (the maximum of `|self − other|` is attained on the union of knots).
    pub fn sup_distance(&self, other: &GridFunction) -> f64 {
        let mut d: f64 = 0.0;
        for j in 0..=self.segments() {
            let s = self.knot(j);
            d = d.max((self.values[j] - other.eval(s)).abs());
        }
        for j in 0..=other.segments() {
            let s = other.knot(j);
            d = d.max((other.values[j] - self.eval(s)).abs());
        }
        d
    }

    /// Re-samples onto `factor · n` segments (values unchanged as a function).
    pub fn refined(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::InvalidArgument("refinement factor must be ≥ 1".into()));
        }
        let n = self.segments() * factor;
        Self::from_profile(n, |s| self.eval(s))
    }

    /// Two-column CSV `knot,value` with a schema header comment.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# schema=gridfn-v1 segments={}", self.segments())?;
        writeln!(w, "knot,value")?;
        for (j, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{}", self.knot(j), v)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut values = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with("knot") {
                continue;
            }
            let mut cols = trimmed.split(',');
            let (knot, value) = match (cols.next(), cols.next(), cols.next()) {
                (Some(k), Some(v), None) => (k.trim(), v.trim()),
                _ => {
                    return Err(Error::Malformed(format!(
                        "line {}: expected two columns, got {trimmed:?}",
                        lineno + 1
                    )))
                }
            };
            let _: f64 = knot
                .parse()
                .map_err(|_| Error::Malformed(format!("line {}: bad knot {knot:?}", lineno + 1)))?;
            let v: f64 = value
                .parse()
                .map_err(|_| Error::Malformed(format!("line {}: bad value {value:?}", lineno + 1)))?;
            values.push(v);
        }
        Self::new(values)
    }
}
