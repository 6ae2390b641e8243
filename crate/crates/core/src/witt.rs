//! Deformed additions `x ⊕_{S,T} y = min_p p·x + (1-p)·y - T·S(p)`, their
//! closed forms, n-ary and exponent-deformed variants, and defect functionals.
//!
//! `p` always weights the first argument. Infinite arguments are resolved
//! analytically: the minimiser is pushed to the face where the infinite
//! coordinate carries no weight.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::entropy::{Measure, NaryFamily};
use crate::error::{Error, Result};
use crate::solver::{minimize_simplex, minimize_unit_interval, SolverSettings};
use crate::tropical::TropicalValue;

/// Dense grid size used by the exponent-deformed addition.
pub const DEFORMED_GRID_MIN: usize = 2048;

/// Largest arity handled by [`oplus_nary`].
pub const NARY_MAX: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WittContext {
    measure: Measure,
    temperature: f64,
    deform_alpha: Option<f64>,
    solver: SolverSettings,
}

impl WittContext {
    pub fn new(measure: Measure, temperature: f64) -> Result<Self> {
        measure.validate()?;
        check_temperature(temperature)?;
        Ok(WittContext {
            measure,
            temperature,
            deform_alpha: None,
            solver: SolverSettings::default(),
        })
    }

    pub fn with_deform(mut self, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::domain("deform_alpha", alpha, "(0, ∞)"));
        }
        self.deform_alpha = Some(alpha);
        Ok(self)
    }

    pub fn without_deform(mut self) -> Self {
        self.deform_alpha = None;
        self
    }

    pub fn with_solver(mut self, solver: SolverSettings) -> Result<Self> {
        solver.validate()?;
        self.solver = solver;
        Ok(self)
    }

    pub fn with_temperature(mut self, temperature: f64) -> Result<Self> {
        check_temperature(temperature)?;
        self.temperature = temperature;
        Ok(self)
    }

    pub fn with_measure(mut self, measure: Measure) -> Result<Self> {
        measure.validate()?;
        self.measure = measure;
        Ok(self)
    }

    pub fn measure(&self) -> &Measure {
        &self.measure
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn deform_alpha(&self) -> Option<f64> {
        self.deform_alpha
    }

    pub fn solver(&self) -> &SolverSettings {
        &self.solver
    }
}

fn check_temperature(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("T", t, "[0, ∞)"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OplusResult {
    pub value: TropicalValue,
    /// Weight of the first argument at the minimiser.
    pub argmin_p: f64,
    /// A second, separated minimiser ties with the reported one.
    pub multiplicity_hint: bool,
}

fn finite_value(v: f64, what: &'static str) -> Result<TropicalValue> {
    if v.is_nan() {
        Err(Error::Numeric(format!("{what} produced NaN")))
    } else if v.is_finite() {
        Ok(TropicalValue::from_raw(v))
    } else {
        Err(Error::Overflow(what))
    }
}

/// Zero-temperature and infinite-argument cases shared by every binary
/// addition. `None` means the finite minimisation must run.
fn degenerate(ctx: &WittContext, x: f64, y: f64) -> Option<Result<OplusResult>> {
    let t = ctx.temperature;
    let s = &ctx.measure;
    let res = |v: f64, p: f64, hint: bool| {
        finite_or_inf(v, "oplus").map(|value| OplusResult {
            value,
            argmin_p: p,
            multiplicity_hint: hint,
        })
    };
    match (x.is_infinite(), y.is_infinite()) {
        (true, true) => Some(Ok(OplusResult {
            value: TropicalValue::INFINITY,
            argmin_p: 0.0,
            multiplicity_hint: false,
        })),
        (true, false) => Some(res(y - t * s.eval(0.0), 0.0, false)),
        (false, true) => Some(res(x - t * s.eval(1.0), 1.0, false)),
        (false, false) if t == 0.0 => Some(if x < y {
            res(x, 1.0, false)
        } else {
            res(y, 0.0, x == y)
        }),
        _ => None,
    }
}

fn finite_or_inf(v: f64, what: &'static str) -> Result<TropicalValue> {
    if v == f64::INFINITY {
        Ok(TropicalValue::INFINITY)
    } else {
        finite_value(v, what)
    }
}

/// `x ⊕_{S,T} y`. A context carrying an exponent deformation evaluates
/// [`oplus_deformed_full`] instead.
pub fn oplus(ctx: &WittContext, x: TropicalValue, y: TropicalValue) -> Result<OplusResult> {
    if ctx.deform_alpha.is_some() {
        return oplus_deformed_full(ctx, x, y);
    }
    let (x, y) = (x.value(), y.value());
    if let Some(r) = degenerate(ctx, x, y) {
        return r;
    }
    let t = ctx.temperature;
    let s = ctx.measure;
    let f = |p: f64| p * x + (1.0 - p) * y - t * s.eval(p);
    let m = minimize_unit_interval(f, ctx.solver.grid_n, &ctx.solver)?;
    Ok(OplusResult {
        value: finite_value(m.value, "oplus")?,
        argmin_p: m.p,
        multiplicity_hint: m.tie.is_some(),
    })
}

/// `-τ log(a·e^{-x/τ} + b·e^{-y/τ})`, shifted by `min(x, y)` for stability.
fn soft_min(a: f64, x: f64, b: f64, y: f64, tau: f64) -> f64 {
    let m = x.min(y);
    m - tau * (a * (-(x - m) / tau).exp() + b * (-(y - m) / tau).exp()).ln()
}

/// Closed form of `⊕_{S,T}` for Shannon and KL measures.
///
/// KL uses the variational form `-T log(q e^{-x/T} + (1-q) e^{-y/T})`; the
/// reciprocal-temperature variant is [`kl_reciprocal_closed_form`].
pub fn oplus_closed(
    ctx: &WittContext,
    x: TropicalValue,
    y: TropicalValue,
) -> Result<TropicalValue> {
    let t = ctx.temperature;
    if !matches!(ctx.measure, Measure::Shannon { .. } | Measure::Kl { .. }) {
        return Err(Error::Unsupported(format!(
            "no closed form for {} measures",
            ctx.measure.kind_name()
        )));
    }
    if t == 0.0 {
        return Ok(crate::tropical::tropical_add(x, y));
    }
    let (xv, yv) = (x.value(), y.value());
    let v = match ctx.measure {
        Measure::Shannon { scale } => {
            if x.is_infinite() || y.is_infinite() {
                xv.min(yv)
            } else {
                soft_min(1.0, xv, 1.0, yv, t * scale)
            }
        }
        Measure::Kl { q } => match (x.is_infinite(), y.is_infinite()) {
            (true, true) => f64::INFINITY,
            (true, false) => yv - t * (1.0 - q).ln(),
            (false, true) => xv - t * q.ln(),
            (false, false) => soft_min(q, xv, 1.0 - q, yv, t),
        },
        _ => unreachable!(),
    };
    finite_or_inf(v, "oplus_closed")
}

/// `-T log(e^{-x/(qT)} + e^{-y/((1-q)T)})`, the KL closed form with
/// per-argument temperatures `qT` and `(1-q)T`.
pub fn kl_reciprocal_closed_form(q: f64, t: f64, x: f64, y: f64) -> f64 {
    let (a, b) = (-x / (q * t), -y / ((1.0 - q) * t));
    let m = a.max(b);
    -t * (m + ((a - m).exp() + (b - m).exp()).ln())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KlClosedForm {
    /// `-T log(q e^{-x/T} + (1-q) e^{-y/T})`.
    Variational,
    /// `-T log(e^{-x/(qT)} + e^{-y/((1-q)T)})`.
    Reciprocal,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KlClosedFormReport {
    pub q: f64,
    pub temperature: f64,
    pub samples: usize,
    pub variational_max_error: f64,
    pub reciprocal_max_error: f64,
    pub tol: f64,
    /// The candidate matching the minimisation within `tol`, if any.
    pub oracle_match: Option<KlClosedForm>,
}

/// Compares both KL closed-form candidates against direct minimisation.
pub fn kl_closed_form_report(
    ctx: &WittContext,
    points: &[(f64, f64)],
) -> Result<KlClosedFormReport> {
    let Measure::Kl { q } = ctx.measure else {
        return Err(Error::Unsupported(
            "KL closed-form report needs a kl measure".into(),
        ));
    };
    let t = ctx.temperature;
    if t <= 0.0 {
        return Err(Error::domain("T", t, "(0, ∞)"));
    }
    let ctx = ctx.without_deform();
    let mut var_err: f64 = 0.0;
    let mut rec_err: f64 = 0.0;
    for &(x, y) in points {
        let xv = TropicalValue::new(x)?;
        let yv = TropicalValue::new(y)?;
        let oracle = oplus(&ctx, xv, yv)?.value.value();
        var_err = var_err.max((oplus_closed(&ctx, xv, yv)?.value() - oracle).abs());
        rec_err = rec_err.max((kl_reciprocal_closed_form(q, t, x, y) - oracle).abs());
    }
    let tol = 1e-6;
    let oracle_match = if var_err <= tol && var_err <= rec_err {
        Some(KlClosedForm::Variational)
    } else if rec_err <= tol {
        Some(KlClosedForm::Reciprocal)
    } else {
        None
    };
    Ok(KlClosedFormReport {
        q,
        temperature: t,
        samples: points.len(),
        variational_max_error: var_err,
        reciprocal_max_error: rec_err,
        tol,
        oracle_match,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NaryResult {
    pub value: TropicalValue,
    /// Minimising distribution; zero on infinite coordinates.
    pub argmin: Vec<f64>,
}

/// `min_{p ∈ Δ} Σ p_i x_i - T·S_n(p)` with `S_n` supplied by `family`.
///
/// Only the temperature and solver settings of `ctx` are used.
pub fn oplus_nary(
    ctx: &WittContext,
    xs: &[TropicalValue],
    family: &NaryFamily,
) -> Result<TropicalValue> {
    oplus_nary_full(ctx, xs, family).map(|r| r.value)
}

pub fn oplus_nary_full(
    ctx: &WittContext,
    xs: &[TropicalValue],
    family: &NaryFamily,
) -> Result<NaryResult> {
    let n = xs.len();
    if n < 2 {
        return Err(Error::domain("n", n as f64, "[2, 6]"));
    }
    if n > NARY_MAX {
        return Err(Error::TooLarge { n, max: NARY_MAX });
    }
    let t = ctx.temperature;
    let finite: Vec<usize> = (0..n).filter(|&i| xs[i].is_finite()).collect();
    let x: Vec<f64> = xs.iter().map(|v| v.value()).collect();
    let embed = |q: &[f64]| {
        let mut p = vec![0.0; n];
        for (&i, &qi) in finite.iter().zip(q) {
            p[i] = qi;
        }
        p
    };

    if finite.is_empty() {
        return Ok(NaryResult {
            value: TropicalValue::INFINITY,
            argmin: vec![0.0; n],
        });
    }
    if t == 0.0 {
        // First minimal coordinate carries all the weight.
        let k = finite
            .iter()
            .copied()
            .min_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)))
            .expect("nonempty");
        let mut argmin = vec![0.0; n];
        argmin[k] = 1.0;
        return Ok(NaryResult {
            value: TropicalValue::from_raw(x[k]),
            argmin,
        });
    }

    let objective = |q: &[f64]| {
        let p = embed(q);
        let lin: f64 = finite.iter().zip(q).map(|(&i, &qi)| qi * x[i]).sum();
        lin - t * family.eval(&p)
    };

    let (q, v) = match finite.len() {
        1 => (vec![1.0], objective(&[1.0])),
        2 => {
            let m = minimize_unit_interval(
                |a| objective(&[a, 1.0 - a]),
                ctx.solver.grid_n,
                &ctx.solver,
            )?;
            (vec![m.p, 1.0 - m.p], m.value)
        }
        k => minimize_simplex(&objective, k, ctx.solver.simplex_steps(k), &ctx.solver)?,
    };
    Ok(NaryResult {
        value: finite_value(v, "oplus_nary")?,
        argmin: embed(&q),
    })
}

/// `min_s s^α·x + (1-s)^α·y - T·S(s)` with `α` taken from the context.
pub fn oplus_deformed(
    ctx: &WittContext,
    x: TropicalValue,
    y: TropicalValue,
) -> Result<TropicalValue> {
    oplus_deformed_full(ctx, x, y).map(|r| r.value)
}

pub fn oplus_deformed_full(
    ctx: &WittContext,
    x: TropicalValue,
    y: TropicalValue,
) -> Result<OplusResult> {
    let Some(alpha) = ctx.deform_alpha else {
        return Err(Error::Unsupported(
            "oplus_deformed needs deform_alpha".into(),
        ));
    };
    let plain = ctx.without_deform();
    if alpha == 1.0 {
        return oplus(&plain, x, y);
    }
    let (x, y) = (x.value(), y.value());
    if let Some(r) = degenerate(&plain, x, y) {
        return r;
    }
    let t = ctx.temperature;
    let s = ctx.measure;
    let f = |p: f64| p.powf(alpha) * x + (1.0 - p).powf(alpha) * y - t * s.eval(p);
    let grid = ctx.solver.grid_n.max(DEFORMED_GRID_MIN);
    let m = minimize_unit_interval(f, grid, &ctx.solver)?;
    Ok(OplusResult {
        value: finite_value(m.value, "oplus_deformed")?,
        argmin_p: m.p,
        multiplicity_hint: m.tie.is_some(),
    })
}

/// `|a - b|`, with `∞ - ∞` read as zero.
fn gap(a: TropicalValue, b: TropicalValue) -> f64 {
    if a == b {
        0.0
    } else {
        (a.value() - b.value()).abs()
    }
}

fn op(ctx: &WittContext, x: TropicalValue, y: TropicalValue) -> Result<TropicalValue> {
    oplus(ctx, x, y).map(|r| r.value)
}

/// `|x ⊕ y - y ⊕ x|`.
pub fn commutator(ctx: &WittContext, x: TropicalValue, y: TropicalValue) -> Result<f64> {
    Ok(gap(op(ctx, x, y)?, op(ctx, y, x)?))
}

/// `|x ⊕ (y ⊕ z) - (x ⊕ y) ⊕ z|`.
pub fn associator(
    ctx: &WittContext,
    x: TropicalValue,
    y: TropicalValue,
    z: TropicalValue,
) -> Result<f64> {
    let right = op(ctx, x, op(ctx, y, z)?)?;
    let left = op(ctx, op(ctx, x, y)?, z)?;
    Ok(gap(right, left))
}

fn kl_pair(ctx: &WittContext) -> Result<(WittContext, WittContext)> {
    let Measure::Kl { q } = ctx.measure else {
        return Err(Error::Unsupported("needs a kl measure".into()));
    };
    Ok((*ctx, ctx.with_measure(Measure::kl(1.0 - q)?)?))
}

/// `|x ⊕_q y - y ⊕_{1-q} x|` for a KL context.
pub fn kl_swap_defect(ctx: &WittContext, x: TropicalValue, y: TropicalValue) -> Result<f64> {
    let (a, b) = kl_pair(ctx)?;
    Ok(gap(op(&a, x, y)?, op(&b, y, x)?))
}

/// `|x ⊕_q (y ⊕_q z) - (z ⊕_{1-q} y) ⊕_{1-q} x|` for a KL context.
pub fn kl_reversal_defect(
    ctx: &WittContext,
    x: TropicalValue,
    y: TropicalValue,
    z: TropicalValue,
) -> Result<f64> {
    let (a, b) = kl_pair(ctx)?;
    let lhs = op(&a, x, op(&a, y, z)?)?;
    let rhs = op(&b, op(&b, z, y)?, x)?;
    Ok(gap(lhs, rhs))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DefectKind {
    Comm,
    Assoc,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DefectReport {
    pub kind: DefectKind,
    pub samples: usize,
    pub seed: u64,
    pub max_defect: f64,
    /// Arguments attaining `max_defect`.
    pub witness: Vec<f64>,
}

/// Range of the random arguments drawn by [`defect_sweep`].
pub const DEFECT_SAMPLE_RANGE: (f64, f64) = (-3.0, 3.0);

/// Maximum defect over `samples` seeded random arguments in
/// [`DEFECT_SAMPLE_RANGE`]. Trial `i` draws from ChaCha8 stream `i`, so the
/// report does not depend on thread scheduling.
pub fn defect_sweep(
    ctx: &WittContext,
    kind: DefectKind,
    samples: usize,
    seed: u64,
) -> Result<DefectReport> {
    if samples == 0 {
        return Err(Error::domain("samples", 0.0, "[1, ∞)"));
    }
    let arity = match kind {
        DefectKind::Comm => 2,
        DefectKind::Assoc => 3,
    };
    let (lo, hi) = DEFECT_SAMPLE_RANGE;
    let trials: Vec<Result<(usize, f64, Vec<f64>)>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let args: Vec<f64> = (0..arity).map(|_| rng.gen_range(lo..hi)).collect();
            let tv: Vec<TropicalValue> = args.iter().map(|&a| TropicalValue::from_raw(a)).collect();
            let d = match kind {
                DefectKind::Comm => commutator(ctx, tv[0], tv[1])?,
                DefectKind::Assoc => associator(ctx, tv[0], tv[1], tv[2])?,
            };
            Ok((i, d, args))
        })
        .collect();
    let mut best: Option<(usize, f64, Vec<f64>)> = None;
    for trial in trials {
        let trial = trial?;
        if best.as_ref().is_none_or(|b| trial.1 > b.1) {
            best = Some(trial);
        }
    }
    let (_, max_defect, witness) = best.expect("samples > 0");
    Ok(DefectReport {
        kind,
        samples,
        seed,
        max_defect,
        witness,
    })
}
