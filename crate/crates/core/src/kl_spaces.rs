//! KL-deformed additions indexed by binary sequences, multifractal
//! statistics of Cantor-type sets, and tuple-valued (hyperfield) additions.
//!
//! A prefix `η` of a binary sequence fixes the measure `-KL(·; q(η))` with
//! `q(η)` its frequency of ones. Frequencies 0 and 1 are outside the KL domain.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::entropy::{kl_binary, Measure};
use crate::error::{Error, Result};
use crate::solver::SolverSettings;
use crate::tropical::{tropical_add, TropicalValue};
use crate::witt::{commutator, oplus, WittContext};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BitString {
    bits: Vec<bool>,
}

impl BitString {
    pub fn new(bits: Vec<bool>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::Unsupported("bit strings are nonempty".into()));
        }
        Ok(BitString { bits })
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::Unsupported(format!("`{c}` is not a binary digit"))),
            })
            .collect::<Result<Vec<bool>>>()?;
        BitString::new(bits)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Fraction of ones, `a_n / n`.
pub fn digit_frequency(s: &BitString) -> f64 {
    s.ones() as f64 / s.len() as f64
}

/// Exchanges the digits 0 and 1.
pub fn bitflip(s: &BitString) -> BitString {
    BitString {
        bits: s.bits.iter().map(|b| !b).collect(),
    }
}

/// The KL parameter `q(η)`; all-zero and all-one prefixes are rejected.
pub fn prefix_measure(s: &BitString) -> Result<Measure> {
    let q = digit_frequency(s);
    if s.ones() == 0 || s.ones() == s.len() {
        return Err(Error::domain("digit frequency", q, "(0, 1)"));
    }
    Measure::kl(q)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TupleValue {
    coords: Vec<TropicalValue>,
}

impl TupleValue {
    pub fn new(coords: Vec<TropicalValue>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Unsupported(
                "tuples have at least one coordinate".into(),
            ));
        }
        Ok(TupleValue { coords })
    }

    pub fn from_f64s(xs: &[f64]) -> Result<Self> {
        TupleValue::new(
            xs.iter()
                .map(|&x| TropicalValue::new(x))
                .collect::<Result<_>>()?,
        )
    }

    pub fn coords(&self) -> &[TropicalValue] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
}

fn same_len(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::LengthMismatch {
            expected: a,
            got: b,
        })
    }
}

fn kl_contexts(qs: &[f64], t: f64, solver: Option<SolverSettings>) -> Result<Vec<WittContext>> {
    qs.iter()
        .map(|&q| {
            let c = WittContext::new(Measure::kl(q)?, t)?;
            match solver {
                Some(s) => c.with_solver(s),
                None => Ok(c),
            }
        })
        .collect()
}

/// Coordinate `i` is `x_i ⊕ y_i` under `-KL(·; qs[i])` at temperature `t`.
pub fn pointwise_oplus(qs: &[f64], xs: &TupleValue, ys: &TupleValue, t: f64) -> Result<TupleValue> {
    same_len(xs.len(), ys.len())?;
    same_len(xs.len(), qs.len())?;
    let coords = kl_contexts(qs, t, None)?
        .iter()
        .zip(xs.coords.iter().zip(&ys.coords))
        .map(|(c, (&x, &y))| oplus(c, x, y).map(|r| r.value))
        .collect::<Result<_>>()?;
    TupleValue::new(coords)
}

/// Per-coordinate commutators of [`pointwise_oplus`].
pub fn pointwise_commutators(
    qs: &[f64],
    xs: &TupleValue,
    ys: &TupleValue,
    t: f64,
) -> Result<Vec<f64>> {
    same_len(xs.len(), ys.len())?;
    same_len(xs.len(), qs.len())?;
    kl_contexts(qs, t, None)?
        .iter()
        .zip(xs.coords.iter().zip(&ys.coords))
        .map(|(c, (&x, &y))| commutator(c, x, y))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MultifractalStats {
    pub local_dim: f64,
    pub local_entropy: f64,
    pub lyapunov: f64,
}

/// Local entropy `q log p + (1-q) log(1-p)`, local dimension
/// `local_entropy / log λ₁` and Lyapunov exponent `q log λ₁ + (1-q) log λ₂`.
pub fn multifractal_stats(q: f64, p: f64, lambda1: f64, lambda2: f64) -> Result<MultifractalStats> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::domain("q", q, "[0, 1]"));
    }
    for (name, v) in [("p", p), ("lambda1", lambda1), ("lambda2", lambda2)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::domain(name, v, "(0, 1)"));
        }
    }
    let h = q * p.ln() + (1.0 - q) * (1.0 - p).ln();
    Ok(MultifractalStats {
        local_dim: h / lambda1.ln(),
        local_entropy: h,
        lyapunov: q * lambda1.ln() + (1.0 - q) * lambda2.ln(),
    })
}

/// Largest tuple length [`hyper_add`] enumerates.
pub const HYPER_ENUMERATE_MAX: usize = 20;

/// Ranks a candidate: fewer infinite coordinates first, then smaller
/// finite sum.
fn trace_key(t: &[TropicalValue]) -> (usize, f64) {
    let inf = t.iter().filter(|v| v.is_infinite()).count();
    let sum = t.iter().filter(|v| v.is_finite()).map(|v| v.value()).sum();
    (inf, sum)
}

/// The tuples with `z_i ∈ {x_i, y_i}` of least trace, i.e. maximal in the
/// min-plus order. Enumerates all choices up to [`HYPER_ENUMERATE_MAX`]
/// coordinates, beyond that takes coordinate-wise minima.
pub fn hyper_add(xs: &TupleValue, ys: &TupleValue) -> Result<Vec<TupleValue>> {
    same_len(xs.len(), ys.len())?;
    let n = xs.len();
    if n > HYPER_ENUMERATE_MAX {
        return Ok(vec![hyper_add_closed(xs, ys)?]);
    }
    let mut best: Vec<Vec<TropicalValue>> = Vec::new();
    let mut best_key = (usize::MAX, f64::INFINITY);
    let mut cand = vec![TropicalValue::ONE; n];
    for mask in 0u32..(1u32 << n) {
        for (i, slot) in cand.iter_mut().enumerate() {
            *slot = if mask >> i & 1 == 1 {
                ys.coords[i]
            } else {
                xs.coords[i]
            };
        }
        let key = trace_key(&cand);
        if key.0 < best_key.0 || (key.0 == best_key.0 && key.1 < best_key.1) {
            best_key = key;
            best.clear();
            best.push(cand.clone());
        } else if key == best_key && !best.contains(&cand) {
            best.push(cand.clone());
        }
    }
    best.into_iter().map(TupleValue::new).collect()
}

/// Coordinate-wise `min(x_i, y_i)`.
pub fn hyper_add_closed(xs: &TupleValue, ys: &TupleValue) -> Result<TupleValue> {
    same_len(xs.len(), ys.len())?;
    TupleValue::new(
        xs.coords
            .iter()
            .zip(&ys.coords)
            .map(|(&x, &y)| tropical_add(x, y))
            .collect(),
    )
}

/// Default tie tolerance for multivalued minimisers.
pub const DEFAULT_TIE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarginalOplus {
    /// Distinct value tuples attaining the per-coordinate minima.
    pub values: Vec<TupleValue>,
    /// For each coordinate, the marginal minimisers tying within `tie_tol`.
    pub minimizers: Vec<Vec<f64>>,
}

impl MarginalOplus {
    /// Every combination of per-coordinate minimisers.
    pub fn minimizer_tuples(&self) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = vec![Vec::new()];
        for choices in &self.minimizers {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    choices.iter().map(move |&p| {
                        let mut t = prefix.clone();
                        t.push(p);
                        t
                    })
                })
                .collect();
        }
        out
    }
}

/// `min_{p_1..p_n} Σ_i (p_i x_i + (1-p_i) y_i + T·KL(p_i; q_i))`, solved
/// marginally. The value tuple is unique; minimisers may be multivalued.
pub fn oplus_marginal(
    qs: &[f64],
    xs: &TupleValue,
    ys: &TupleValue,
    t: f64,
    tie_tol: f64,
) -> Result<MarginalOplus> {
    same_len(xs.len(), ys.len())?;
    same_len(xs.len(), qs.len())?;
    if t <= 0.0 {
        return Err(Error::domain("T", t, "(0, ∞)"));
    }
    let solver = SolverSettings {
        tol: tie_tol,
        ..SolverSettings::default()
    };
    solver.validate()?;
    let mut coords = Vec::with_capacity(qs.len());
    let mut minimizers = Vec::with_capacity(qs.len());
    for (c, (&x, &y)) in kl_contexts(qs, t, Some(solver))?
        .iter()
        .zip(xs.coords.iter().zip(&ys.coords))
    {
        let r = oplus(c, x, y)?;
        coords.push(r.value);
        let mut ps = vec![r.argmin_p];
        if r.multiplicity_hint {
            // The solver reports only that a tie exists; recover it by
            // scanning for a separated point with the same value.
            let Measure::Kl { q } = *c.measure() else {
                unreachable!()
            };
            let f = |p: f64| p * x.value() + (1.0 - p) * y.value() + t * kl_binary(p, q);
            let target = r.value.value();
            if let Some(p) = (0..=4096)
                .map(|k| k as f64 / 4096.0)
                .find(|&p| (p - r.argmin_p).abs() > 1e-3 && f(p) - target <= tie_tol)
            {
                ps.push(p);
            }
        }
        minimizers.push(ps);
    }
    Ok(MarginalOplus {
        values: vec![TupleValue::new(coords)?],
        minimizers,
    })
}

/// Largest product length [`kl_product_defect`] enumerates.
pub const PRODUCT_MAX: usize = 16;

/// KL divergence between the product distributions, by enumerating all
/// `2^n` outcomes, and the sum of the marginal divergences.
pub fn kl_product_sides(ps: &[f64], qs: &[f64]) -> Result<(f64, f64)> {
    same_len(ps.len(), qs.len())?;
    let n = ps.len();
    if n == 0 || n > PRODUCT_MAX {
        return Err(Error::TooLarge {
            n,
            max: PRODUCT_MAX,
        });
    }
    for (name, v) in ps
        .iter()
        .map(|&p| ("p", p))
        .chain(qs.iter().map(|&q| ("q", q)))
    {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::domain(name, v, "(0, 1)"));
        }
    }
    let mut joint = 0.0;
    for mask in 0u32..(1u32 << n) {
        let (mut pw, mut qw) = (1.0, 1.0);
        for i in 0..n {
            if mask >> i & 1 == 1 {
                pw *= ps[i];
                qw *= qs[i];
            } else {
                pw *= 1.0 - ps[i];
                qw *= 1.0 - qs[i];
            }
        }
        joint += pw * (pw / qw).ln();
    }
    let marginal = ps.iter().zip(qs).map(|(&p, &q)| kl_binary(p, q)).sum();
    Ok((joint, marginal))
}

/// `|KL(⊗p; ⊗q) - Σ_i KL(p_i; q_i)|`.
pub fn kl_product_defect(ps: &[f64], qs: &[f64]) -> Result<f64> {
    let (joint, marginal) = kl_product_sides(ps, qs)?;
    Ok((joint - marginal).abs())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CantorReport {
    pub prefix: String,
    pub q: f64,
    pub oplus: f64,
    pub argmin_p: f64,
    /// `|x ⊕_q y - y ⊕_q x|`.
    pub comm_defect: f64,
    /// `|x ⊕_{q(η)} y - y ⊕_{q(flip η)} x|`.
    pub flipped_check: f64,
}

pub fn cantor_report(
    prefix: &BitString,
    t: f64,
    x: TropicalValue,
    y: TropicalValue,
) -> Result<CantorReport> {
    let ctx = WittContext::new(prefix_measure(prefix)?, t)?;
    let flipped = WittContext::new(prefix_measure(&bitflip(prefix))?, t)?;
    let r = oplus(&ctx, x, y)?;
    let back = oplus(&flipped, y, x)?.value;
    let flipped_check = if r.value == back {
        0.0
    } else {
        (r.value.value() - back.value()).abs()
    };
    Ok(CantorReport {
        prefix: prefix.to_string(),
        q: digit_frequency(prefix),
        oplus: r.value.value(),
        argmin_p: r.argmin_p,
        comm_defect: commutator(&ctx, x, y)?,
        flipped_check,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::LN_2;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn tup(xs: &[f64]) -> TupleValue {
        TupleValue::from_f64s(xs).unwrap()
    }

    #[test]
    fn digits() {
        assert_eq!(digit_frequency(&bs("0101")), 0.5);
        assert_eq!(digit_frequency(&bs("111")), 1.0);
        assert_eq!(bitflip(&bs("0101")), bs("1010"));
        assert_eq!(bitflip(&bs("000")).to_string(), "111");
        assert!("".parse::<BitString>().is_err());
        assert!("012".parse::<BitString>().is_err());
        assert!(prefix_measure(&bs("000")).is_err());
        assert!(prefix_measure(&bs("111")).is_err());
    }

    #[test]
    fn uniform_field_is_shifted_shannon() {
        let t = 0.7;
        let xs = tup(&[0.0, 1.5, -2.0]);
        let ys = tup(&[0.3, -1.0, 4.0]);
        let r = pointwise_oplus(&[0.5; 3], &xs, &ys, t).unwrap();
        let sh = WittContext::new(Measure::shannon(), t).unwrap();
        for i in 0..3 {
            let s = oplus(&sh, xs.coords()[i], ys.coords()[i])
                .unwrap()
                .value
                .value();
            assert!((r.coords()[i].value() - (s + t * LN_2)).abs() <= 1e-8);
        }
        assert!(pointwise_oplus(&[0.5; 2], &xs, &ys, t).is_err());
        assert!(pointwise_oplus(&[0.0, 0.5, 0.5], &xs, &ys, t).is_err());
    }

    #[test]
    fn fair_coordinates_commute() {
        let qs = [0.5, 0.3, 0.5, 0.9];
        let xs = tup(&[0.0, 0.0, 1.0, -1.0]);
        let ys = tup(&[1.0, 1.0, -2.0, 0.5]);
        let d = pointwise_commutators(&qs, &xs, &ys, 1.0).unwrap();
        for (q, d) in qs.iter().zip(&d) {
            assert_eq!(*d <= 1e-8, (q - 0.5).abs() <= 1e-8, "q={q} d={d}");
        }
    }

    #[test]
    fn flip_restores_by_swapping() {
        let qs = [0.2, 0.65];
        let flipped: Vec<f64> = qs.iter().map(|q| 1.0 - q).collect();
        let xs = tup(&[0.4, -1.0]);
        let ys = tup(&[1.1, 2.0]);
        let a = pointwise_oplus(&qs, &xs, &ys, 1.3).unwrap();
        let b = pointwise_oplus(&flipped, &ys, &xs, 1.3).unwrap();
        for (u, v) in a.coords().iter().zip(b.coords()) {
            assert!((u.value() - v.value()).abs() <= 1e-8);
        }
    }

    #[test]
    fn multifractal_examples() {
        let s = multifractal_stats(0.5, 0.5, 1.0 / 3.0, 0.2).unwrap();
        assert!((s.local_dim - LN_2 / 3f64.ln()).abs() <= 1e-15);
        assert!((s.local_entropy + LN_2).abs() <= 1e-15);
        for q in [0.0, 0.3, 1.0] {
            let s = multifractal_stats(q, 0.4, 0.25, 0.25).unwrap();
            assert!((s.lyapunov - 0.25f64.ln()).abs() <= 1e-15);
        }
        assert!(multifractal_stats(0.5, 0.0, 0.3, 0.3).is_err());
        assert!(multifractal_stats(0.5, 0.5, 1.0, 0.3).is_err());
        assert!(multifractal_stats(1.5, 0.5, 0.3, 0.3).is_err());
    }

    #[test]
    fn hyper_add_examples() {
        assert_eq!(
            hyper_add(&tup(&[1.0, 5.0]), &tup(&[2.0, 3.0])).unwrap(),
            vec![tup(&[1.0, 3.0])]
        );
        assert_eq!(
            hyper_add(&tup(&[0.0, 0.0]), &tup(&[0.0, 0.0])).unwrap(),
            vec![tup(&[0.0, 0.0])]
        );
        let inf = f64::INFINITY;
        assert_eq!(
            hyper_add(&tup(&[inf, 1.0]), &tup(&[0.0, inf])).unwrap(),
            vec![tup(&[0.0, 1.0])]
        );
        assert_eq!(
            hyper_add(&tup(&[inf, 1.0]), &tup(&[inf, 0.0])).unwrap(),
            vec![tup(&[inf, 0.0])]
        );
        assert!(hyper_add(&tup(&[1.0]), &tup(&[1.0, 2.0])).is_err());
        let big = tup(&[1.0; 21]);
        assert_eq!(hyper_add(&big, &big).unwrap(), vec![big.clone()]);
    }

    #[test]
    fn marginal_examples() {
        let xs = tup(&[0.3]);
        let ys = tup(&[-0.8]);
        let m = oplus_marginal(&[0.25], &xs, &ys, 1.0, DEFAULT_TIE_TOL).unwrap();
        let c = WittContext::new(Measure::kl(0.25).unwrap(), 1.0).unwrap();
        assert_eq!(
            m.values[0].coords()[0],
            oplus(&c, xs.coords()[0], ys.coords()[0]).unwrap().value
        );

        let xs = tup(&[0.3, 1.2, -0.5]);
        let ys = tup(&[-0.8, 0.4, 2.0]);
        let m = oplus_marginal(&[0.5; 3], &xs, &ys, 1.0, DEFAULT_TIE_TOL).unwrap();
        assert_eq!(m.values.len(), 1);
        assert_eq!(m.minimizer_tuples().len(), 1);

        let qs = [0.2, 0.5, 0.7];
        let m = oplus_marginal(&qs, &xs, &ys, 1.0, DEFAULT_TIE_TOL).unwrap();
        let ps: Vec<f64> = m.minimizers.iter().map(|c| c[0]).collect();
        assert!(kl_product_defect(&ps, &qs).unwrap() <= 1e-12);

        let cold = oplus_marginal(&qs, &xs, &ys, 1e-6, DEFAULT_TIE_TOL).unwrap();
        let hyper = hyper_add_closed(&xs, &ys).unwrap();
        for (a, b) in cold.values[0].coords().iter().zip(hyper.coords()) {
            assert!((a.value() - b.value()).abs() <= 1e-4);
        }
        assert!(oplus_marginal(&qs, &xs, &ys, 0.0, DEFAULT_TIE_TOL).is_err());
    }

    #[test]
    fn product_examples() {
        let (j, m) = kl_product_sides(&[0.5, 0.5], &[0.25, 0.75]).unwrap();
        let want = (4.0f64 / 3.0).ln();
        assert!((j - want).abs() <= 1e-15 && (m - want).abs() <= 1e-15);
        let (j, m) = kl_product_sides(&[0.3, 0.6, 0.1], &[0.3, 0.6, 0.1]).unwrap();
        assert!(j.abs() <= 1e-15 && m == 0.0);
        assert!(kl_product_defect(&[0.5; 17], &[0.5; 17]).is_err());
    }

    #[test]
    fn cantor_examples() {
        let x = TropicalValue::new(0.3).unwrap();
        let y = TropicalValue::new(1.7).unwrap();
        let r = cantor_report(&bs("010110"), 1.0, x, y).unwrap();
        assert_eq!(r.q, 0.5);
        assert!(r.comm_defect <= 1e-8 && r.flipped_check <= 1e-8);
        let r = cantor_report(&bs("011110"), 1.0, x, y).unwrap();
        assert!(r.comm_defect > 1e-3 && r.flipped_check <= 1e-8);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn flip_is_involution(bits in prop::collection::vec(any::<bool>(), 1..80)) {
            let s = BitString::new(bits).unwrap();
            prop_assert_eq!(bitflip(&bitflip(&s)), s.clone());
            prop_assert_eq!(bitflip(&s).len(), s.len());
            prop_assert!((digit_frequency(&bitflip(&s)) - (1.0 - digit_frequency(&s))).abs() <= 1e-15);
        }

        #[test]
        fn hyper_add_is_coordinatewise_min(pairs in prop::collection::vec((-5i32..5, -5i32..5), 1..11)) {
            let xs: Vec<f64> = pairs.iter().map(|p| p.0 as f64 * 0.5).collect();
            let ys: Vec<f64> = pairs.iter().map(|p| p.1 as f64 * 0.5).collect();
            let h = hyper_add(&tup(&xs), &tup(&ys)).unwrap();
            prop_assert_eq!(h, vec![hyper_add_closed(&tup(&xs), &tup(&ys)).unwrap()]);
        }

        #[test]
        fn product_defect_small(ps in prop::collection::vec(0.01f64..0.99, 1..5),
                                seed in prop::collection::vec(0.01f64..0.99, 4)) {
            let qs = &seed[..ps.len()];
            prop_assert!(kl_product_defect(&ps, qs).unwrap() <= 1e-12);
        }
    }
}
