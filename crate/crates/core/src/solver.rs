//! Minimisers used by every deformed addition: a coarse grid on `[0, 1]`
//! refined by golden-section search, and a simplex grid refined by pairwise
//! mass exchange.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolverSettings {
    /// Points in the coarse grid on `[0, 1]`.
    pub grid_n: usize,
    /// Golden-section iterations per bracket.
    pub refine_iters: usize,
    /// Bracket width at which refinement stops; also the tie tolerance.
    pub tol: f64,
    /// Simplex grid denominator for n-ary minimisation; `None` picks a
    /// default by dimension.
    pub grid_simplex: Option<usize>,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            grid_n: 512,
            refine_iters: 80,
            tol: 1e-10,
            grid_simplex: None,
        }
    }
}

impl SolverSettings {
    pub const MIN_GRID: usize = 64;

    pub fn validate(&self) -> Result<()> {
        if self.grid_n < Self::MIN_GRID {
            return Err(Error::domain("grid_n", self.grid_n as f64, "[64, ∞)"));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::domain("tol", self.tol, "(0, ∞)"));
        }
        if self.grid_simplex.is_some_and(|g| g < 2) {
            return Err(Error::domain("grid_simplex", 1.0, "[2, ∞)"));
        }
        Ok(())
    }

    /// Simplex grid denominator used for `dim` free coordinates.
    pub fn simplex_steps(&self, dim: usize) -> usize {
        self.grid_simplex.unwrap_or(match dim {
            0..=3 => 200,
            4 => 80,
            5 => 50,
            _ => 30,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Minimum {
    pub p: f64,
    pub value: f64,
    /// Another, separated minimiser within `tol` of the best value.
    pub tie: Option<f64>,
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search on `[a, b]`; returns the best point evaluated.
pub(crate) fn golden_section(
    f: &impl Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    iters: usize,
    tol: f64,
) -> (f64, f64) {
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if b - a <= tol {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Global minimum of `f` on `[0, 1]`.
///
/// Evaluates a uniform grid of `grid_n` points, keeps the three best local
/// minima, refines each bracket and returns the best. Among minimisers within
/// `tol` of each other the smallest `p` wins.
pub(crate) fn minimize_unit_interval(
    f: impl Fn(f64) -> f64,
    grid_n: usize,
    settings: &SolverSettings,
) -> Result<Minimum> {
    let n = grid_n.max(3);
    let h = 1.0 / (n - 1) as f64;
    let grid: Vec<f64> = (0..n)
        .map(|i| if i == n - 1 { 1.0 } else { i as f64 * h })
        .collect();
    let values: Vec<f64> = grid.iter().map(|&p| f(p)).collect();
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Numeric("objective evaluated to NaN".into()));
    }

    let mut locals: Vec<usize> = (0..n)
        .filter(|&i| {
            let left = i == 0 || values[i] <= values[i - 1];
            let right = i == n - 1 || values[i] <= values[i + 1];
            left && right
        })
        .collect();
    locals.sort_by(|&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j)));
    // Runs of equal grid values would otherwise crowd out distinct minima.
    let mut picked: Vec<usize> = Vec::with_capacity(3);
    for i in locals {
        if picked.iter().all(|&j: &usize| j.abs_diff(i) > 1) {
            picked.push(i);
        }
        if picked.len() == 3 {
            break;
        }
    }

    let mut candidates: Vec<(f64, f64)> = picked
        .iter()
        .map(|&i| {
            let lo = if i == 0 { 0.0 } else { grid[i - 1] };
            let hi = if i == n - 1 { 1.0 } else { grid[i + 1] };
            let (p, v) = golden_section(&f, lo, hi, settings.refine_iters, settings.tol);
            // Improvements at rounding level would move exact end-point
            // minima onto noise.
            let noise = 8.0 * f64::EPSILON * (1.0 + values[i].abs());
            if values[i] <= v + noise {
                (grid[i], values[i])
            } else {
                (p, v)
            }
        })
        .collect();
    candidates.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
    let best_value = candidates[0].1;
    if !best_value.is_finite() {
        return Err(Error::Numeric(format!(
            "objective minimum is not finite ({best_value})"
        )));
    }
    let tied: Vec<(f64, f64)> = candidates
        .iter()
        .copied()
        .filter(|c| c.1 - best_value <= settings.tol)
        .collect();
    let (p, value) = tied
        .iter()
        .copied()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("at least one candidate");
    let tie = tied.iter().map(|c| c.0).find(|&q| (q - p).abs() > 1.5 * h);
    Ok(Minimum { p, value, tie })
}

/// Calls `visit` on every composition of `total` into `buf.len() + parts`
/// nonnegative parts, with the prefix already in `buf`.
fn for_each_composition(
    total: usize,
    parts: usize,
    buf: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize]),
) {
    if parts == 1 {
        buf.push(total);
        visit(buf);
        buf.pop();
        return;
    }
    for k in 0..=total {
        buf.push(k);
        for_each_composition(total - k, parts - 1, buf, visit);
        buf.pop();
    }
}

/// Exhaustive minimum of `f` over the simplex grid `{k / steps}` in
/// dimension `dim`. Ties go to the lexicographically smallest composition.
pub(crate) fn grid_min_simplex<F>(f: &F, dim: usize, steps: usize) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    assert!(dim >= 1 && steps >= 1);
    let scale = 1.0 / steps as f64;
    let best = (0..=steps)
        .into_par_iter()
        .map(|first| {
            let mut buf = vec![first];
            let mut p = vec![0.0; dim];
            let mut best: Option<(Vec<usize>, f64)> = None;
            let mut visit = |c: &[usize]| {
                for (slot, &k) in p.iter_mut().zip(c) {
                    *slot = k as f64 * scale;
                }
                let v = f(&p);
                if v.is_nan() {
                    return;
                }
                if best.as_ref().is_none_or(|(_, bv)| v < *bv) {
                    best = Some((c.to_vec(), v));
                }
            };
            if dim == 1 {
                if first == steps {
                    visit(&[first]);
                }
            } else {
                for_each_composition(steps - first, dim - 1, &mut buf, &mut visit);
            }
            best
        })
        .reduce(
            || None,
            |a, b| match (a, b) {
                (None, x) | (x, None) => x,
                (Some(a), Some(b)) => {
                    if b.1 < a.1 || (b.1 == a.1 && b.0 < a.0) {
                        Some(b)
                    } else {
                        Some(a)
                    }
                }
            },
        );
    match best {
        Some((c, v)) => (c.into_iter().map(|k| k as f64 * scale).collect(), v),
        None => (vec![f64::NAN; dim], f64::NAN),
    }
}

/// Simplex grid followed by pairwise mass-exchange descent.
///
/// Each sweep moves mass between every pair of coordinates with a golden
/// search over a window of two grid steps; sweeps repeat until the value
/// stops improving.
pub(crate) fn minimize_simplex<F>(
    f: &F,
    dim: usize,
    steps: usize,
    settings: &SolverSettings,
) -> Result<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let (mut p, mut value) = grid_min_simplex(f, dim, steps);
    if !value.is_finite() {
        return Err(Error::Numeric(format!(
            "simplex objective minimum is not finite ({value})"
        )));
    }
    let window = 2.0 / steps as f64;
    const MAX_SWEEPS: usize = 200;
    let mut trial = p.clone();
    for _ in 0..MAX_SWEEPS {
        let start = value;
        for i in 0..dim {
            for j in (i + 1)..dim {
                let s = p[i] + p[j];
                if s <= 0.0 {
                    continue;
                }
                trial.copy_from_slice(&p);
                let line = |t: f64| {
                    let mut q = trial.clone();
                    q[i] = t;
                    q[j] = s - t;
                    f(&q)
                };
                let lo = (p[i] - window).max(0.0);
                let hi = (p[i] + window).min(s);
                let (mut t, mut v) =
                    golden_section(&line, lo, hi, settings.refine_iters, settings.tol);
                for edge in [lo, hi] {
                    if edge == 0.0 || edge == s {
                        let ve = line(edge);
                        if ve < v {
                            t = edge;
                            v = ve;
                        }
                    }
                }
                if v < value {
                    p[i] = t;
                    p[j] = s - t;
                    value = v;
                }
            }
        }
        if start - value <= 1e-15 * (1.0 + value.abs()) {
            break;
        }
    }
    Ok((p, value))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_section_finds_parabola_vertex() {
        let (x, v) = golden_section(&|x: f64| (x - 0.3).powi(2), 0.0, 1.0, 200, 1e-12);
        assert!((x - 0.3).abs() < 1e-6);
        assert!(v < 1e-12);
    }

    #[test]
    fn unit_interval_prefers_global_minimum() {
        // Two wells; the right one is deeper.
        let f = |p: f64| (p - 0.2).powi(2) * (p - 0.8).powi(2) - 0.01 * p;
        let m = minimize_unit_interval(f, 512, &SolverSettings::default()).unwrap();
        assert!((m.p - 0.8).abs() < 0.02, "{m:?}");
    }

    #[test]
    fn unit_interval_reports_ties() {
        let f = |p: f64| (p - 0.2).powi(2) * (p - 0.8).powi(2);
        let m = minimize_unit_interval(f, 512, &SolverSettings::default()).unwrap();
        assert!((m.p - 0.2).abs() < 1e-4, "smallest minimiser wins: {m:?}");
        assert!(m.tie.is_some_and(|q| (q - 0.8).abs() < 1e-4));
    }

    #[test]
    fn unit_interval_boundary_minimum() {
        let m = minimize_unit_interval(|p| p, 128, &SolverSettings::default()).unwrap();
        assert_eq!(m.p, 0.0);
        assert_eq!(m.value, 0.0);
    }

    #[test]
    fn composition_count() {
        let mut count = 0;
        for_each_composition(10, 3, &mut Vec::new(), &mut |_| count += 1);
        assert_eq!(count, 66);
    }

    #[test]
    fn simplex_descent_reaches_interior_minimum() {
        let target = [0.123, 0.456, 0.421];
        let f = |p: &[f64]| {
            p.iter()
                .zip(&target)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
        };
        let (p, v) = minimize_simplex(&f, 3, 20, &SolverSettings::default()).unwrap();
        assert!(v < 1e-14, "{p:?} {v}");
    }
}
