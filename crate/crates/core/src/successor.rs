//! The successor function `λ(x, T) = x ⊕_S 0` and what it determines.
//!
//! `λ` is the min-plus Legendre transform of `T·S`: every binary addition is
//! recovered as `x ⊕ y = λ(x - y) + y`, and `T·S(p) = min_x (p·x - λ(x))`.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::entropy::{Measure, SHANNON_LIMIT_BAND};
use crate::error::{Error, Result};
use crate::solver::golden_section;
use crate::tropical::TropicalValue;
use crate::witt::{oplus, OplusResult, WittContext};

/// Half-width of the recovery grid, in units of `T`.
pub const RECOVERY_SPAN: f64 = 40.0;

/// Default relative central-difference step.
pub const DEFAULT_DIFF_STEP: f64 = 1e-4;

pub fn successor(ctx: &WittContext, x: TropicalValue) -> Result<OplusResult> {
    oplus(ctx, x, TropicalValue::ONE)
}

fn successor_value(ctx: &WittContext, x: f64) -> Result<f64> {
    Ok(successor(ctx, TropicalValue::new(x)?)?.value.value())
}

/// `λ` in closed or piecewise form: Shannon and KL analytically, Tsallis by
/// inverting `S'` with bisection.
pub fn successor_closed(ctx: &WittContext, x: TropicalValue) -> Result<TropicalValue> {
    let t = ctx.temperature();
    let m = *ctx.measure();
    if let Measure::Renyi { .. } = m {
        return Err(Error::Unsupported(
            "renyi successor has no closed form".into(),
        ));
    }
    if ctx.deform_alpha().is_some() {
        return Err(Error::Unsupported(
            "no closed successor for a deformed addition".into(),
        ));
    }
    if x.is_infinite() {
        return TropicalValue::new(-t * m.eval(0.0));
    }
    let x = x.value();
    if t == 0.0 {
        return TropicalValue::new(x.min(0.0));
    }
    let v = match m {
        Measure::Shannon { scale } => shannon_successor(x, t * scale),
        Measure::Kl { q } => {
            let u = -x / t;
            // -T log(q e^u + 1 - q), evaluated without overflow for large u.
            if u > 0.0 {
                x - t * (q + (1.0 - q) * (-u).exp()).ln()
            } else {
                -t * (q * u.exp() + 1.0 - q).ln()
            }
        }
        Measure::Tsallis { alpha } => {
            if (alpha - 1.0).abs() <= SHANNON_LIMIT_BAND {
                shannon_successor(x, t)
            } else {
                tsallis_successor(alpha, t, x)
            }
        }
        Measure::Renyi { .. } => unreachable!(),
    };
    TropicalValue::new(v)
}

fn shannon_successor(x: f64, tau: f64) -> f64 {
    // -τ log(1 + e^{-x/τ}) = min(x, 0) - τ log(1 + e^{-|x|/τ}).
    x.min(0.0) - tau * (-(x.abs()) / tau).exp().ln_1p()
}

/// `S'(p)` for Tsallis entropy of order `alpha`; decreasing on `(0, 1)`.
pub fn tsallis_derivative(alpha: f64, p: f64) -> f64 {
    alpha / (1.0 - alpha) * (p.powf(alpha - 1.0) - (1.0 - p).powf(alpha - 1.0))
}

fn tsallis_successor(alpha: f64, t: f64, x: f64) -> f64 {
    let u = x / t;
    if alpha > 1.0 {
        // S' maps [0, 1] onto [-B, B]; outside it the minimiser sits at an end.
        let bound = alpha / (alpha - 1.0);
        if u >= bound {
            return 0.0;
        }
        if u <= -bound {
            return x;
        }
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if tsallis_derivative(alpha, mid) > u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let p = 0.5 * (lo + hi);
    let s = Measure::Tsallis { alpha };
    // The chosen root can miss the end points; those are exact candidates.
    (p * x - t * s.eval(p)).min(0.0).min(x)
}

fn check_recovery_grid(t: f64, x_grid: &[f64]) -> Result<()> {
    if t <= 0.0 {
        return Err(Error::domain("T", t, "(0, ∞)"));
    }
    let (lo, hi) = x_grid
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
            (a.min(x), b.max(x))
        });
    let need = RECOVERY_SPAN * t;
    if x_grid.len() < 3 || x_grid.iter().any(|x| !x.is_finite()) || lo > -need || hi < need {
        return Err(Error::Unsupported(format!(
            "recovery grid must be finite and span [-{need}, {need}]"
        )));
    }
    Ok(())
}

/// `min_x (p·x - λ(x))`: the grid minimum, refined by golden-section search
/// between the neighbours of the best grid point. Recovers `T·S(p)` when `S`
/// is concave.
pub fn recover_entropy(ctx: &WittContext, p: f64, x_grid: &[f64]) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain("p", p, "[0, 1]"));
    }
    check_recovery_grid(ctx.temperature(), x_grid)?;
    let mut grid = x_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let values: Vec<f64> = grid
        .par_iter()
        .map(|&x| successor_value(ctx, x).map(|l| p * x - l))
        .collect::<Result<_>>()?;
    let (i, &best) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty grid");
    let lo = grid[i.saturating_sub(1)];
    let hi = grid[(i + 1).min(grid.len() - 1)];
    if lo == hi {
        return Ok(best);
    }
    let g = |x: f64| match successor_value(ctx, x) {
        Ok(l) => p * x - l,
        Err(_) => f64::INFINITY,
    };
    let (_, refined) = golden_section(&g, lo, hi, 200, 1e-12 * (1.0 + lo.abs().max(hi.abs())));
    Ok(best.min(refined))
}

/// `min_i (p·x_i - λ_i)` over a sampled curve, without refinement.
pub fn recover_entropy_from_curve(curve: &SuccessorCurve, p: f64) -> f64 {
    curve
        .xs
        .iter()
        .zip(&curve.values)
        .map(|(x, l)| p * x - l)
        .fold(f64::INFINITY, f64::min)
}

/// A grid spanning `[-RECOVERY_SPAN·T, RECOVERY_SPAN·T]` with `n` points.
pub fn recovery_grid(t: f64, n: usize) -> Vec<f64> {
    let half = RECOVERY_SPAN * t;
    let n = n.max(3);
    (0..n)
        .map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64)
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CumulantResiduals {
    /// `|λ - x·∂_x λ - T·∂_T λ|`.
    pub euler: f64,
    /// `|λ - T·∂_T λ - p_T(x)·x|`.
    pub first_cumulant: f64,
}

/// Residuals of the Euler relation and of the first-cumulant identity, with
/// central differences of step `h·max(1, |x|, T)`.
pub fn cumulant_residuals(ctx: &WittContext, x: f64, h: f64) -> Result<CumulantResiduals> {
    let t = ctx.temperature();
    if t <= 0.0 {
        return Err(Error::domain("T", t, "(0, ∞)"));
    }
    if !(1e-6..=1e-2).contains(&h) {
        return Err(Error::domain("h", h, "[1e-6, 1e-2]"));
    }
    if !x.is_finite() {
        return Err(Error::domain("x", x, "finite reals"));
    }
    let step = h * 1f64.max(x.abs()).max(t);
    let at = successor(ctx, TropicalValue::new(x)?)?;
    let lam = at.value.value();
    let dx = (successor_value(ctx, x + step)? - successor_value(ctx, x - step)?) / (2.0 * step);
    let st = step.min(0.5 * t);
    let hot = ctx.with_temperature(t + st)?;
    let cold = ctx.with_temperature(t - st)?;
    let dt = (successor_value(&hot, x)? - successor_value(&cold, x)?) / (2.0 * st);
    Ok(CumulantResiduals {
        euler: (lam - x * dx - t * dt).abs(),
        first_cumulant: (lam - t * dt - at.argmin_p * x).abs(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuccessorCurve {
    pub ctx: WittContext,
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
    pub argmins: Vec<f64>,
}

/// `λ` and `p_T` on the grid `x_min, x_min + step, …`, closed at `x_max`.
pub fn sample_curve(
    ctx: &WittContext,
    x_min: f64,
    x_max: f64,
    step: f64,
) -> Result<SuccessorCurve> {
    if !(x_min.is_finite() && x_max.is_finite()) || x_min >= x_max {
        return Err(Error::Unsupported(format!(
            "need finite x_min < x_max, got [{x_min}, {x_max}]"
        )));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::domain("step", step, "(0, ∞)"));
    }
    let count = ((x_max - x_min) / step + 1e-9).floor();
    if count > 1e7 {
        return Err(Error::TooLarge {
            n: count as usize,
            max: 10_000_000,
        });
    }
    // Anchor on integer multiples of `step` when `x_min` is one, so grid
    // points such as 0 are hit exactly.
    let k0 = (x_min / step).round();
    let anchored = (k0 * step - x_min).abs() <= 1e-12 * x_min.abs().max(step);
    let mut xs: Vec<f64> = (0..=count as usize)
        .map(|i| {
            if anchored {
                (k0 + i as f64) * step
            } else {
                x_min + step * i as f64
            }
        })
        .collect();
    if x_max - xs[xs.len() - 1] > 1e-9 * step {
        xs.push(x_max);
    }
    let results: Vec<OplusResult> = xs
        .par_iter()
        .map(|&x| successor(ctx, TropicalValue::new(x)?))
        .collect::<Result<_>>()?;
    Ok(SuccessorCurve {
        ctx: *ctx,
        values: results.iter().map(|r| r.value.value()).collect(),
        argmins: results.iter().map(|r| r.argmin_p).collect(),
        xs,
    })
}

impl SuccessorCurve {
    /// Writes `x,lambda,argmin_p` rows with round-trip precision.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Numeric(format!("csv write failed: {e}"));
        w.write_record(["x", "lambda", "argmin_p"]).map_err(io)?;
        for i in 0..self.xs.len() {
            w.write_record([
                self.xs[i].to_string(),
                self.values[i].to_string(),
                self.argmins[i].to_string(),
            ])
            .map_err(io)?;
        }
        w.flush()
            .map_err(|e| Error::Numeric(format!("csv write failed: {e}")))?;
        Ok(())
    }

    /// Largest `|λ_{i+1} - 2λ_i + λ_{i-1}|`.
    pub fn max_second_difference(&self) -> f64 {
        self.values
            .windows(3)
            .map(|w| (w[2] - 2.0 * w[1] + w[0]).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_nondecreasing(&self, tol: f64) -> bool {
        self.values.windows(2).all(|w| w[1] >= w[0] - tol)
    }
}
