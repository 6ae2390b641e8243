//! Legendre–Fenchel conjugation of sampled functions,
//! `f*(x) = max_i (α_i·x - f(α_i))`.
//!
//! Conjugate values are rounded upward, so a biconjugate evaluated on the
//! original grid never exceeds `f` there, even in floating point.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampledFunction {
    grid: Vec<f64>,
    /// `+∞` marks points outside the effective domain.
    values: Vec<f64>,
}

fn check_grid(grid: &[f64], what: &str) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::Sampled(format!("{what} needs at least two points")));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::Sampled(format!("{what} must be finite")));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Sampled(format!(
            "{what} must be strictly increasing"
        )));
    }
    Ok(())
}

impl SampledFunction {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_grid(&grid, "grid")?;
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Sampled("values must not be NaN".into()));
        }
        if values.contains(&f64::NEG_INFINITY) {
            return Err(Error::NegativeInfinity);
        }
        Ok(SampledFunction { grid, values })
    }

    pub fn from_fn(grid: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.iter().map(|&x| f(x)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Reads rows `x,f` after a header line.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(input);
        let headers = rdr
            .headers()
            .map_err(|e| Error::Sampled(format!("csv: {e}")))?
            .clone();
        if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "f" {
            return Err(Error::Sampled(format!(
                "expected header `x,f`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let (mut grid, mut values) = (Vec::new(), Vec::new());
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Sampled(format!("csv: {e}")))?;
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Sampled(format!("row {}: `{s}` is not a number", line + 1)))
            };
            grid.push(parse(&rec[0])?);
            values.push(parse(&rec[1])?);
        }
        Self::new(grid, values)
    }

    /// Writes rows `x,f` with round-trip precision; `+∞` is written as `inf`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let io = |e: std::io::Error| Error::Sampled(format!("csv write failed: {e}"));
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "f"]).map_err(|e| io(e.into()))?;
        for (x, v) in self.grid.iter().zip(&self.values) {
            w.write_record([x.to_string(), v.to_string()])
                .map_err(|e| io(e.into()))?;
        }
        w.flush().map_err(io)
    }
}

/// `max_i fl(α_i·x - f_i)` over the finite samples, with a single rounding.
fn sup_affine(grid: &[f64], values: &[f64], x: f64) -> f64 {
    grid.iter()
        .zip(values)
        .filter(|(_, v)| v.is_finite())
        .map(|(&a, &v)| a.mul_add(x, -v))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn finite_domain(f: &SampledFunction) -> Result<()> {
    if f.values.iter().all(|v| v.is_infinite()) {
        return Err(Error::Sampled(
            "function is +∞ everywhere; its conjugate is -∞".into(),
        ));
    }
    Ok(())
}

/// `f*` on `dual_grid`, each value rounded up to dominate the exact supremum.
pub fn conjugate(f: &SampledFunction, dual_grid: &[f64]) -> Result<SampledFunction> {
    check_grid(dual_grid, "dual grid")?;
    finite_domain(f)?;
    let values: Vec<f64> = dual_grid
        .par_iter()
        .map(|&x| sup_affine(&f.grid, &f.values, x).next_up())
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Overflow("conjugate"));
    }
    SampledFunction::new(dual_grid.to_vec(), values)
}

/// `f**` on `primal_grid`, through `f*` sampled on `dual_grid`.
///
/// At points of `f`'s own grid the result is at most `f`, exactly.
pub fn biconjugate(
    f: &SampledFunction,
    dual_grid: &[f64],
    primal_grid: &[f64],
) -> Result<SampledFunction> {
    check_grid(primal_grid, "primal grid")?;
    let (lo, hi) = (f.grid[0], f.grid[f.grid.len() - 1]);
    if primal_grid[0] < lo || primal_grid[primal_grid.len() - 1] > hi {
        return Err(Error::Sampled(format!(
            "primal grid leaves the hull [{lo}, {hi}] of the sample grid"
        )));
    }
    let star = conjugate(f, dual_grid)?;
    let values: Vec<f64> = primal_grid
        .par_iter()
        .map(|&a| sup_affine(&star.grid, &star.values, a))
        .collect();
    SampledFunction::new(primal_grid.to_vec(), values)
}

/// Largest excess of `f` at a grid point over the chord through its two
/// neighbours, clamped at zero. On a uniform grid the chord value is the
/// neighbour average.
pub fn convexity_defect(f: &SampledFunction) -> f64 {
    let (g, v) = (&f.grid, &f.values);
    (1..g.len().saturating_sub(1))
        .map(|i| {
            let (l, m, r) = (v[i - 1], v[i], v[i + 1]);
            if m.is_infinite() {
                return if l.is_finite() && r.is_finite() {
                    f64::INFINITY
                } else {
                    0.0
                };
            }
            if l.is_infinite() || r.is_infinite() {
                return 0.0;
            }
            let t = (g[i] - g[i - 1]) / (g[i + 1] - g[i - 1]);
            (m - ((1.0 - t) * l + t * r)).max(0.0)
        })
        .fold(0.0, f64::max)
}

/// `lo, lo + step, …` up to and including `hi` within rounding.
pub fn uniform_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n)
        .map(|i| {
            if i == n && ((lo + step * n as f64) - hi).abs() < 1e-9 * step {
                hi
            } else {
                lo + step * i as f64
            }
        })
        .collect()
}
