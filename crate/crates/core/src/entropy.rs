//! Binary information measures and their chain extensions.
//!
//! Every measure is evaluated as a function `S(p)` on `[0, 1]` with natural
//! logarithms and the analytic conventions `0·log 0 = 0`, `0·log(0/q) = 0`.
//! The KL measure returns `-KL(p; q)`, so every deformed addition in this
//! crate minimises the same objective `p·x + (1-p)·y - T·S(p)`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use serde::Serialize;

use crate::error::{Error, Result};

/// Orders within this distance of 1 evaluate as Shannon entropy.
pub const SHANNON_LIMIT_BAND: f64 = 1e-8;

/// Tolerance on `|Σp - 1|` accepted by the n-ary operations.
pub const SIMPLEX_SUM_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Measure {
    /// `-C (p log p + (1-p) log(1-p))`.
    Shannon { scale: f64 },
    /// `log(p^α + (1-p)^α) / (1-α)`.
    Renyi { alpha: f64 },
    /// `(1 - p^α - (1-p)^α) / (α-1)`, normalisation `φ(α) = 1-α`.
    Tsallis { alpha: f64 },
    /// `-KL(p; q)`.
    Kl { q: f64 },
}

impl Measure {
    pub fn shannon() -> Self {
        Measure::Shannon { scale: 1.0 }
    }

    pub fn shannon_scaled(scale: f64) -> Result<Self> {
        Measure::Shannon { scale }.validated()
    }

    pub fn renyi(alpha: f64) -> Result<Self> {
        Measure::Renyi { alpha }.validated()
    }

    pub fn tsallis(alpha: f64) -> Result<Self> {
        Measure::Tsallis { alpha }.validated()
    }

    pub fn kl(q: f64) -> Result<Self> {
        Measure::Kl { q }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Measure::Shannon { scale } => {
                if !(scale.is_finite() && scale > 0.0) {
                    return Err(Error::domain("C", scale, "(0, ∞)"));
                }
            }
            Measure::Renyi { alpha } | Measure::Tsallis { alpha } => {
                if !(alpha.is_finite() && alpha > 0.0) {
                    return Err(Error::domain("alpha", alpha, "(0, ∞) \\ {1}"));
                }
                if alpha == 1.0 {
                    return Err(Error::domain("alpha", alpha, "(0, ∞) \\ {1}"));
                }
            }
            Measure::Kl { q } => {
                if !(q > 0.0 && q < 1.0) {
                    return Err(Error::domain("q", q, "(0, 1)"));
                }
            }
        }
        Ok(())
    }

    /// Short name used in reports.
    pub fn kind_name(&self) -> &'static str {
        match self {
            Measure::Shannon { .. } => "shannon",
            Measure::Renyi { .. } => "renyi",
            Measure::Tsallis { .. } => "tsallis",
            Measure::Kl { .. } => "kl",
        }
    }

    /// `S(p)` without range checks; `p` must lie in `[0, 1]`.
    #[inline]
    pub fn eval(&self, p: f64) -> f64 {
        match *self {
            Measure::Shannon { scale } => scale * shannon_raw(p),
            Measure::Renyi { alpha } => {
                if (alpha - 1.0).abs() <= SHANNON_LIMIT_BAND {
                    shannon_raw(p)
                } else {
                    (p.powf(alpha) + (1.0 - p).powf(alpha)).ln() / (1.0 - alpha)
                }
            }
            Measure::Tsallis { alpha } => {
                if (alpha - 1.0).abs() <= SHANNON_LIMIT_BAND {
                    shannon_raw(p)
                } else {
                    (1.0 - p.powf(alpha) - (1.0 - p).powf(alpha)) / (alpha - 1.0)
                }
            }
            Measure::Kl { q } => -kl_binary(p, q),
        }
    }

    /// Whether `S(p) = S(1-p)` holds identically.
    pub fn is_commutative(&self) -> bool {
        match *self {
            Measure::Kl { q } => q == 0.5,
            _ => true,
        }
    }

    /// Whether `S(0) = S(1) = 0`.
    pub fn has_identity(&self) -> bool {
        !matches!(self, Measure::Kl { .. })
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Measure::Shannon { scale: 1.0 } => f.write_str("shannon"),
            Measure::Shannon { scale } => write!(f, "shannon:{scale}"),
            Measure::Renyi { alpha } => write!(f, "renyi:{alpha}"),
            Measure::Tsallis { alpha } => write!(f, "tsallis:{alpha}"),
            Measure::Kl { q } => write!(f, "kl:{q}"),
        }
    }
}

/// Parses `shannon[:C]`, `renyi:α`, `tsallis:α`, `kl:q`.
impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::MeasureSpec(s.to_string());
        let (kind, param) = match s.trim().split_once(':') {
            Some((k, v)) => (k, Some(v.trim().parse::<f64>().map_err(|_| bad())?)),
            None => (s.trim(), None),
        };
        let measure = match (kind.to_ascii_lowercase().as_str(), param) {
            ("shannon", None) => Measure::shannon(),
            ("shannon", Some(c)) => Measure::Shannon { scale: c },
            ("renyi", Some(a)) => Measure::Renyi { alpha: a },
            ("tsallis", Some(a)) => Measure::Tsallis { alpha: a },
            ("kl", Some(q)) => Measure::Kl { q },
            _ => return Err(bad()),
        };
        measure.validated()
    }
}

#[inline]
fn xlogx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

#[inline]
fn shannon_raw(p: f64) -> f64 {
    -(xlogx(p) + xlogx(1.0 - p))
}

/// Binary `KL(p; q) = p log(p/q) + (1-p) log((1-p)/(1-q))`.
#[inline]
pub fn kl_binary(p: f64, q: f64) -> f64 {
    let a = if p <= 0.0 { 0.0 } else { p * (p / q).ln() };
    let r = 1.0 - p;
    let b = if r <= 0.0 {
        0.0
    } else {
        r * (r / (1.0 - q)).ln()
    };
    a + b
}

/// `S(p)` with domain checks.
pub fn entropy2(m: &Measure, p: f64) -> Result<f64> {
    m.validate()?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain("p", p, "[0, 1]"));
    }
    Ok(m.eval(p))
}

pub(crate) fn check_simplex(probs: &[f64]) -> Result<()> {
    let mut sum = 0.0;
    for &p in probs {
        if !(p >= 0.0 && p.is_finite()) {
            return Err(Error::domain("probability", p, "[0, 1]"));
        }
        sum += p;
    }
    if probs.is_empty() || (sum - 1.0).abs() > SIMPLEX_SUM_TOL {
        return Err(Error::domain("sum of probabilities", sum, "1 ± 1e-12"));
    }
    Ok(())
}

/// Chain extension on unnormalised masses:
/// `Σ_{j<n-1} r_j S(m_j / r_j)` with `r_j = Σ_{i≥j} m_i`.
///
/// This equals `M · S_n(m / M)` for total mass `M`; remainders are suffix
/// sums so every ratio stays in `[0, 1]`.
pub(crate) fn chain_mass(m: &Measure, masses: &[f64]) -> f64 {
    let n = masses.len();
    if n < 2 {
        return 0.0;
    }
    // Suffix sums built from the back: a trailing run of zero masses leaves
    // the last nonzero ratio at exactly 1.
    let mut suffix = vec![0.0; n + 1];
    for j in (0..n).rev() {
        suffix[j] = masses[j] + suffix[j + 1];
    }
    let mut acc = 0.0;
    for (j, &mj) in masses[..n - 1].iter().enumerate() {
        let rem = suffix[j];
        if rem > 0.0 {
            acc += rem * m.eval((mj / rem).min(1.0));
        }
    }
    acc
}

/// The n-ary chain extension `S_n(p₁..p_n) = Σ_j (1 - Σ_{i<j} p_i) S(p_j / (1 - Σ_{i<j} p_i))`.
pub fn entropy_chain(m: &Measure, probs: &[f64]) -> Result<f64> {
    m.validate()?;
    check_simplex(probs)?;
    Ok(chain_mass(m, probs))
}

const KHINCHIN_PARTITIONS: [[&[usize]; 2]; 3] = [[&[0, 1], &[2]], [&[0], &[1, 2]], [&[0, 2], &[1]]];

/// Khinchin additivity defect of the chain extension for one partition.
///
/// Compares `S_n(p)` with `S_m(q₁..q_m) + Σ_k q_k S_{|J_k|}(J_k / q_k)`, where
/// block `k` lists indices into `probs` and `q_k` is its total mass.
pub fn grouping_defect(m: &Measure, probs: &[f64], groups: &[Vec<usize>]) -> Result<f64> {
    m.validate()?;
    check_simplex(probs)?;
    let mut seen = vec![false; probs.len()];
    for &i in groups.iter().flatten() {
        if i >= probs.len() || seen[i] {
            return Err(Error::Unsupported(format!(
                "groups must partition 0..{}",
                probs.len()
            )));
        }
        seen[i] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::Unsupported(format!(
            "groups must partition 0..{}",
            probs.len()
        )));
    }
    Ok(grouping_defect_unchecked(m, probs, groups))
}

fn grouping_defect_unchecked(m: &Measure, probs: &[f64], groups: &[Vec<usize>]) -> f64 {
    let full = chain_mass(m, probs);
    let sums: Vec<f64> = groups
        .iter()
        .map(|b| b.iter().map(|&i| probs[i]).sum())
        .collect();
    let mut grouped = chain_mass(m, &sums);
    let mut block = Vec::new();
    for b in groups {
        block.clear();
        block.extend(b.iter().map(|&i| probs[i]));
        grouped += chain_mass(m, &block);
    }
    (full - grouped).abs()
}

/// A binary associativity-type functional `S(p₁) + w(1-p₁) S(p₂/(1-p₁))`
/// against `S(p₁+p₂) + w(p₁+p₂) S(p₁/(p₁+p₂))`, with `w(t) = t^exponent`.
fn assoc_defect(m: &Measure, p1: f64, p2: f64, exponent: f64) -> f64 {
    let w = |t: f64| if exponent == 1.0 { t } else { t.powf(exponent) };
    let left = m.eval(p1) + w(1.0 - p1) * m.eval(ratio(p2, 1.0 - p1));
    let right = m.eval(p1 + p2) + w(p1 + p2) * m.eval(ratio(p1, p1 + p2));
    (left - right).abs()
}

#[inline]
fn ratio(a: f64, b: f64) -> f64 {
    if b <= 0.0 {
        0.0
    } else {
        (a / b).clamp(0.0, 1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AxiomCheck {
    pub defect: f64,
    /// A grid point realising the defect (`p` or `(p₁, p₂)`).
    pub witness: [f64; 2],
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AxiomReport {
    pub measure: Measure,
    pub grid_step: f64,
    pub tol: f64,
    pub commutativity: AxiomCheck,
    pub left_identity: AxiomCheck,
    pub right_identity: AxiomCheck,
    pub associativity: AxiomCheck,
    /// Present when an exponent was supplied.
    pub alpha_associativity: Option<(f64, AxiomCheck)>,
    pub khinchin_additivity: AxiomCheck,
}

struct MaxTracker {
    defect: f64,
    witness: [f64; 2],
}

impl MaxTracker {
    fn new() -> Self {
        MaxTracker {
            defect: 0.0,
            witness: [0.0, 0.0],
        }
    }

    fn push(&mut self, d: f64, w: [f64; 2]) {
        if d > self.defect || d.is_nan() {
            self.defect = d;
            self.witness = w;
        }
    }

    fn finish(self, tol: f64) -> AxiomCheck {
        AxiomCheck {
            defect: self.defect,
            witness: self.witness,
            pass: self.defect <= tol,
        }
    }
}

/// Maximum axiom defects over a probability grid of the given step.
///
/// The Khinchin check compares the chain extension on a 3-point simplex grid
/// with its grouped form for the three two-block partitions.
pub fn axiom_report(
    m: &Measure,
    grid_step: f64,
    tol: f64,
    alpha: Option<f64>,
) -> Result<AxiomReport> {
    m.validate()?;
    if !(grid_step > 0.0 && grid_step <= 0.1) {
        return Err(Error::domain("grid_step", grid_step, "(0, 0.1]"));
    }
    let steps = (1.0 / grid_step).round() as usize;
    let h = 1.0 / steps as f64;

    let mut comm = MaxTracker::new();
    for i in 0..=steps {
        let p = i as f64 * h;
        comm.push((m.eval(p) - m.eval(1.0 - p)).abs(), [p, 0.0]);
    }
    let mut left = MaxTracker::new();
    left.push(m.eval(0.0).abs(), [0.0, 0.0]);
    let mut right = MaxTracker::new();
    right.push(m.eval(1.0).abs(), [1.0, 0.0]);

    let mut assoc = MaxTracker::new();
    let mut alpha_assoc = MaxTracker::new();
    let mut khinchin = MaxTracker::new();
    for i in 0..=steps {
        for j in 0..=(steps - i) {
            let p1 = i as f64 * h;
            let p2 = j as f64 * h;
            let p3 = (1.0 - p1 - p2).max(0.0);
            assoc.push(assoc_defect(m, p1, p2, 1.0), [p1, p2]);
            if let Some(a) = alpha {
                alpha_assoc.push(assoc_defect(m, p1, p2, a), [p1, p2]);
            }
            let probs = [p1, p2, p3];
            for groups in KHINCHIN_PARTITIONS {
                let g: Vec<Vec<usize>> = groups.iter().map(|b| b.to_vec()).collect();
                khinchin.push(grouping_defect_unchecked(m, &probs, &g), [p1, p2]);
            }
        }
    }

    Ok(AxiomReport {
        measure: *m,
        grid_step: h,
        tol,
        commutativity: comm.finish(tol),
        left_identity: left.finish(tol),
        right_identity: right.finish(tol),
        associativity: assoc.finish(tol),
        alpha_associativity: alpha.map(|a| (a, alpha_assoc.finish(tol))),
        khinchin_additivity: khinchin.finish(tol),
    })
}

/// An n-ary measure `S_j` evaluated on a normalised probability vector.
pub type NaryFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A family `{S_j}` of n-ary measures built on a binary base measure.
///
/// Arity `j` uses the explicit override when one is registered and the chain
/// extension of the base measure otherwise.
#[derive(Clone)]
pub struct NaryFamily {
    base: Measure,
    overrides: BTreeMap<usize, NaryFn>,
}

impl fmt::Debug for NaryFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NaryFamily")
            .field("base", &self.base)
            .field("overrides", &self.overrides.keys().collect::<Vec<_>>())
            .finish()
    }
}

impl NaryFamily {
    pub fn chain(base: Measure) -> Self {
        NaryFamily {
            base,
            overrides: BTreeMap::new(),
        }
    }

    pub fn with_override(mut self, arity: usize, s: NaryFn) -> Result<Self> {
        if arity < 2 {
            return Err(Error::domain("arity", arity as f64, "[2, ∞)"));
        }
        self.overrides.insert(arity, s);
        Ok(self)
    }

    pub fn base(&self) -> &Measure {
        &self.base
    }

    pub fn has_override(&self, arity: usize) -> bool {
        self.overrides.contains_key(&arity)
    }

    /// `S_n(p)` for a probability vector of length `n`.
    pub fn eval(&self, probs: &[f64]) -> f64 {
        match self.overrides.get(&probs.len()) {
            Some(s) => s(probs),
            None => chain_mass(&self.base, probs),
        }
    }

    /// `M · S_n(m / M)` for masses of total `M`; zero total gives zero.
    pub(crate) fn eval_mass(&self, masses: &[f64]) -> f64 {
        match self.overrides.get(&masses.len()) {
            None => chain_mass(&self.base, masses),
            Some(s) => {
                let total: f64 = masses.iter().sum();
                if total <= 0.0 {
                    return 0.0;
                }
                let normalised: Vec<f64> = masses.iter().map(|m| m / total).collect();
                total * s(&normalised)
            }
        }
    }

    /// Largest `|S_n(p with a zero inserted) - S_{n-1}(p)|` over seeded random
    /// points, all insertion positions and `3 ≤ n ≤ max_arity`.
    pub fn coherence_defect(&self, max_arity: usize, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for n in 3..=max_arity {
            for _ in 0..samples {
                let raw: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(0.0..1.0)).collect();
                let total: f64 = raw.iter().sum();
                let p: Vec<f64> = raw.iter().map(|r| r / total).collect();
                let reduced = self.eval(&p);
                for pos in 0..n {
                    let mut q = p.clone();
                    q.insert(pos, 0.0);
                    worst = worst.max((self.eval(&q) - reduced).abs());
                }
            }
        }
        worst
    }
}
