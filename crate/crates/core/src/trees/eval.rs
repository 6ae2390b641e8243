//! Tree-indexed entropies `S_𝐓`, nested evaluation of a tree, and the
//! brute-force simplex oracle `min_p Σ p_i x_i - T·S_𝐓(p)`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{GuessingTree, Node};
use crate::entropy::{check_simplex, NaryFamily};
use crate::error::{Error, Result};
use crate::solver::minimize_simplex;
use crate::tropical::TropicalValue;
use crate::witt::{oplus, oplus_nary, WittContext, DEFECT_SAMPLE_RANGE};

/// Largest tree accepted by [`tree_eval_oracle`].
pub const ORACLE_MAX_LEAVES: usize = 5;

fn oracle_steps(n: usize) -> usize {
    match n {
        2 => 1000,
        3 => 400,
        4 => 100,
        _ => 60,
    }
}

/// `S_𝐓` on masses: each node contributes `M·S_m(group masses / M)`.
fn entropy_mass(node: &Node, fam: &NaryFamily, p: &[f64]) -> (f64, f64) {
    match node {
        Node::Leaf(l) => (p[l - 1], 0.0),
        Node::Branch(c) => {
            let mut masses = Vec::with_capacity(c.len());
            let mut inner = 0.0;
            for child in c {
                let (m, s) = entropy_mass(child, fam, p);
                masses.push(m);
                inner += s;
            }
            (masses.iter().sum(), fam.eval_mass(&masses) + inner)
        }
    }
}

/// `S_𝐓(p)`: the root's group split followed by each subtree's entropy of
/// its conditional distribution, weighted by the group mass.
pub fn tree_entropy(tree: &GuessingTree, fam: &NaryFamily, probs: &[f64]) -> Result<f64> {
    if probs.len() != tree.leaf_count() {
        return Err(Error::LengthMismatch {
            expected: tree.leaf_count(),
            got: probs.len(),
        });
    }
    check_simplex(probs)?;
    Ok(entropy_mass(tree.root(), fam, probs).1)
}

fn check_inputs(tree: &GuessingTree, ctx: &WittContext, xs: &[TropicalValue]) -> Result<()> {
    if xs.len() != tree.leaf_count() {
        return Err(Error::LengthMismatch {
            expected: tree.leaf_count(),
            got: xs.len(),
        });
    }
    if ctx.deform_alpha().is_some() {
        return Err(Error::Unsupported(
            "tree evaluation needs an undeformed context".into(),
        ));
    }
    Ok(())
}

/// `(x_1 ⊕ ⋯ ⊕ x_n)_𝐓` with the chain family of the context's measure.
pub fn tree_eval(
    tree: &GuessingTree,
    ctx: &WittContext,
    xs: &[TropicalValue],
) -> Result<TropicalValue> {
    tree_eval_with(tree, ctx, xs, &NaryFamily::chain(*ctx.measure()))
}

/// Nested evaluation: binary nodes by `oplus` on the family's base measure
/// (unless arity 2 is overridden), wider nodes by `oplus_nary`.
pub fn tree_eval_with(
    tree: &GuessingTree,
    ctx: &WittContext,
    xs: &[TropicalValue],
    fam: &NaryFamily,
) -> Result<TropicalValue> {
    check_inputs(tree, ctx, xs)?;
    let binary = ctx.with_measure(*fam.base())?;
    fn go(
        node: &Node,
        ctx: &WittContext,
        fam: &NaryFamily,
        xs: &[TropicalValue],
    ) -> Result<TropicalValue> {
        match node {
            Node::Leaf(l) => Ok(xs[l - 1]),
            Node::Branch(c) => {
                let vals = c
                    .iter()
                    .map(|k| go(k, ctx, fam, xs))
                    .collect::<Result<Vec<_>>>()?;
                if vals.len() == 2 && !fam.has_override(2) {
                    Ok(oplus(ctx, vals[0], vals[1])?.value)
                } else {
                    oplus_nary(ctx, &vals, fam)
                }
            }
        }
    }
    go(tree.root(), &binary, fam, xs)
}

/// Brute-force `min_p Σ p_i x_i - T·S_𝐓(p)`: a simplex grid of step 1/400,
/// 1/100 or 1/60 for three, four or five leaves, then pairwise mass-exchange
/// descent from the best grid point.
pub fn tree_eval_oracle(
    tree: &GuessingTree,
    ctx: &WittContext,
    xs: &[TropicalValue],
) -> Result<TropicalValue> {
    tree_eval_oracle_with(tree, ctx, xs, &NaryFamily::chain(*ctx.measure()))
}

pub fn tree_eval_oracle_with(
    tree: &GuessingTree,
    ctx: &WittContext,
    xs: &[TropicalValue],
    fam: &NaryFamily,
) -> Result<TropicalValue> {
    check_inputs(tree, ctx, xs)?;
    let n = tree.leaf_count();
    if n > ORACLE_MAX_LEAVES {
        return Err(Error::TooLarge {
            n,
            max: ORACLE_MAX_LEAVES,
        });
    }
    if xs.iter().all(|x| x.is_infinite()) {
        return Ok(TropicalValue::INFINITY);
    }
    if n == 1 || ctx.temperature() == 0.0 {
        return Ok(xs.iter().copied().min().expect("n ≥ 1"));
    }
    let t = ctx.temperature();
    let x: Vec<f64> = xs.iter().map(|v| v.value()).collect();
    let objective = |p: &[f64]| {
        let mut lin = 0.0;
        for (pi, xi) in p.iter().zip(&x) {
            if *pi > 0.0 {
                lin += pi * xi;
            }
        }
        lin - t * entropy_mass(tree.root(), fam, p).1
    };
    let (_, v) = minimize_simplex(&objective, n, oracle_steps(n), ctx.solver())?;
    TropicalValue::new(v)
}

/// Value of the internal algebra determined by `h`: a node whose children
/// are all leaves takes `h_m`; any other node takes `h_m` plus the deformed
/// sum of its children's values, leaves counting as 0.
pub fn internal_alpha(
    tree: &GuessingTree,
    h: &BTreeMap<usize, f64>,
    ctx: &WittContext,
) -> Result<TropicalValue> {
    let fam = NaryFamily::chain(*ctx.measure());
    fn go(
        node: &Node,
        h: &BTreeMap<usize, f64>,
        ctx: &WittContext,
        fam: &NaryFamily,
    ) -> Result<TropicalValue> {
        let Node::Branch(c) = node else {
            return Ok(TropicalValue::ONE);
        };
        let m = c.len();
        let hm = *h.get(&m).ok_or(Error::MissingArity(m))?;
        let hm = TropicalValue::new(hm)?;
        if c.iter().all(|k| matches!(k, Node::Leaf(_))) {
            return Ok(hm);
        }
        let vals = c
            .iter()
            .map(|k| go(k, h, ctx, fam))
            .collect::<Result<Vec<_>>>()?;
        let sum = if m == 2 {
            oplus(ctx, vals[0], vals[1])?.value
        } else {
            oplus_nary(ctx, &vals, fam)?
        };
        crate::tropical::tropical_mul(hm, sum)
    }
    go(tree.root(), h, ctx, &fam)
}

/// Largest `|𝐓_1(xs) - 𝐓_2(xs)|` over `trials` seeded random points in
/// [`DEFECT_SAMPLE_RANGE`]; trial `i` uses ChaCha8 stream `i`.
pub fn relation_defect(
    t1: &GuessingTree,
    t2: &GuessingTree,
    ctx: &WittContext,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    let n = t1.leaf_count();
    if t2.leaf_count() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: t2.leaf_count(),
        });
    }
    let (lo, hi) = DEFECT_SAMPLE_RANGE;
    let defects = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let xs: Vec<TropicalValue> = (0..n)
                .map(|_| TropicalValue::new(rng.gen_range(lo..hi)))
                .collect::<Result<_>>()?;
            let a = tree_eval(t1, ctx, &xs)?.value();
            let b = tree_eval(t2, ctx, &xs)?.value();
            Ok((a - b).abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(defects.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::{entropy_chain, Measure};
    use crate::trees::{enumerate_trees, graft, parse_tree, prob_compose, random_tree};

    fn tv(x: f64) -> TropicalValue {
        TropicalValue::new(x).unwrap()
    }

    fn tvs(xs: &[f64]) -> Vec<TropicalValue> {
        xs.iter().map(|&x| tv(x)).collect()
    }

    fn ctx(m: Measure, t: f64) -> WittContext {
        WittContext::new(m, t).unwrap()
    }

    fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
        let s: f64 = raw.iter().sum();
        let mut p: Vec<f64> = raw.iter().map(|r| r / s).collect();
        let rest: f64 = p[..n - 1].iter().sum();
        p[n - 1] = 1.0 - rest;
        p
    }

    #[test]
    fn comb_entropy_is_chain() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for m in [
            Measure::shannon(),
            Measure::renyi(0.5).unwrap(),
            Measure::tsallis(2.0).unwrap(),
        ] {
            let fam = NaryFamily::chain(m);
            for n in 2..=6 {
                let comb = parse_tree(&comb_text(n)).unwrap();
                let p = random_simplex(&mut rng, n);
                let a = tree_entropy(&comb, &fam, &p).unwrap();
                assert!((a - entropy_chain(&m, &p).unwrap()).abs() <= 1e-10);
            }
        }
    }

    /// `(1 (2 (3 … n)))`, which peels outcomes off in label order.
    fn comb_text(n: usize) -> String {
        let mut s = n.to_string();
        for k in (1..n).rev() {
            s = format!("({k} {s})");
        }
        s
    }

    #[test]
    fn six_leaf_tree_entropy_by_hand() {
        let t = parse_tree("(2 ((1 (4 3)) (5 6)))").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for m in [Measure::renyi(0.5).unwrap(), Measure::tsallis(3.0).unwrap()] {
            let fam = NaryFamily::chain(m);
            for _ in 0..5 {
                let p = random_simplex(&mut rng, 6);
                let s = |x: f64| m.eval(x);
                let (p1, p2, p3, p4, p5, p6) = (p[0], p[1], p[2], p[3], p[4], p[5]);
                let g = p1 + p4 + p3;
                let hand = s(p2)
                    + (1.0 - p2) * s(g / (1.0 - p2))
                    + g * s(p1 / g)
                    + (p4 + p3) * s(p4 / (p4 + p3))
                    + (p5 + p6) * s(p5 / (p5 + p6));
                assert!((tree_entropy(&t, &fam, &p).unwrap() - hand).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn shannon_entropy_is_tree_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let fam = NaryFamily::chain(Measure::shannon());
        for n in 2..=5 {
            for _ in 0..20 {
                let t = random_tree(n, 3, &mut rng).unwrap();
                let p = random_simplex(&mut rng, n);
                let a = tree_entropy(&t, &fam, &p).unwrap();
                assert!((a - entropy_chain(&Measure::shannon(), &p).unwrap()).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn relabelling_permutes_arguments() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let fam = NaryFamily::chain(Measure::renyi(2.0).unwrap());
        let t = parse_tree("((1 2) (3 4) 5)").unwrap();
        let perm = [3, 5, 1, 2, 4];
        let moved = t.relabel(&perm).unwrap();
        for _ in 0..10 {
            let p = random_simplex(&mut rng, 5);
            // Leaf k of t reads p[k-1]; in `moved` it reads q[perm[k-1]-1].
            let mut q = vec![0.0; 5];
            for k in 0..5 {
                q[perm[k] - 1] = p[k];
            }
            let a = tree_entropy(&t, &fam, &p).unwrap();
            let b = tree_entropy(&moved, &fam, &q).unwrap();
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn tree_chain_rule_under_grafting() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let fam = NaryFamily::chain(Measure::tsallis(0.7).unwrap());
        for _ in 0..20 {
            let outer = random_tree(3, 3, &mut rng).unwrap();
            let inners: Vec<GuessingTree> = (1..=3)
                .map(|k| random_tree(k, 3, &mut rng).unwrap())
                .collect();
            let p = random_simplex(&mut rng, 3);
            let qs: Vec<Vec<f64>> = (1..=3)
                .map(|k| {
                    if k == 1 {
                        vec![1.0]
                    } else {
                        random_simplex(&mut rng, k)
                    }
                })
                .collect();
            let g = graft(&outer, &inners).unwrap();
            let lhs = tree_entropy(&g, &fam, &prob_compose(&p, &qs).unwrap()).unwrap();
            let rhs = tree_entropy(&outer, &fam, &p).unwrap()
                + (0..3)
                    .map(|i| p[i] * tree_entropy(&inners[i], &fam, &qs[i]).unwrap())
                    .sum::<f64>();
            assert!((lhs - rhs).abs() <= 1e-12);
        }
    }

    #[test]
    fn eval_examples() {
        let c = ctx(Measure::shannon(), 1.0);
        let t = parse_tree("((1 2) 3)").unwrap();
        let v = tree_eval(&t, &c, &tvs(&[0.0, 0.0, 0.0])).unwrap().value();
        assert!((v + 3f64.ln()).abs() <= 1e-9);
        let c0 = ctx(Measure::renyi(0.5).unwrap(), 0.0);
        let xs = tvs(&[1.0, -2.0, 0.5]);
        assert_eq!(tree_eval(&t, &c0, &xs).unwrap().value(), -2.0);
        assert_eq!(tree_eval_oracle(&t, &c0, &xs).unwrap().value(), -2.0);
        let r = ctx(Measure::renyi(0.5).unwrap(), 1.0);
        let xs = tvs(&[0.0, 1.0, 2.0]);
        let a = tree_eval(&t, &r, &xs).unwrap().value();
        let b = tree_eval(&parse_tree("(1 (2 3))").unwrap(), &r, &xs)
            .unwrap()
            .value();
        assert!((a - b).abs() > 1e-3);
        assert!(tree_eval(&t, &r, &xs[..2]).is_err());
    }

    #[test]
    fn oracle_matches_small_trees() {
        for m in [Measure::shannon(), Measure::renyi(0.5).unwrap()] {
            let c = ctx(m, 1.0);
            for t in enumerate_trees(3, 2).unwrap() {
                let xs = tvs(&[0.3, -1.1, 1.7]);
                let a = tree_eval(&t, &c, &xs).unwrap().value();
                let b = tree_eval_oracle(&t, &c, &xs).unwrap().value();
                assert!((a - b).abs() <= 2e-3, "{t}: {a} vs {b}");
                assert!(b >= a - 1e-9, "grid minimum lies above the true minimum");
            }
        }
        let c = ctx(Measure::tsallis(2.0).unwrap(), 1.0);
        let t = parse_tree("((1 2 3) 4)").unwrap();
        let xs = tvs(&[0.5, -0.5, 1.0, 0.0]);
        let a = tree_eval(&t, &c, &xs).unwrap().value();
        let b = tree_eval_oracle(&t, &c, &xs).unwrap().value();
        assert!((a - b).abs() <= 5e-3, "{a} vs {b}");
        assert!(tree_eval_oracle(&GuessingTree::corolla(6).unwrap(), &c, &tvs(&[0.0; 6])).is_err());
    }

    #[test]
    fn grafting_compatibility() {
        let c = ctx(Measure::renyi(0.7).unwrap(), 0.8);
        let outer = parse_tree("(2 (1 3))").unwrap();
        let inners = [
            parse_tree("(1 2)").unwrap(),
            GuessingTree::unit(),
            parse_tree("((2 1) 3)").unwrap(),
        ];
        let g = graft(&outer, &inners).unwrap();
        let xs = [0.4, -0.3, 1.2, 0.0, -1.0, 2.0];
        let full = tree_eval(&g, &c, &tvs(&xs)).unwrap().value();
        let blocks = [
            tree_eval(&inners[0], &c, &tvs(&xs[0..2])).unwrap(),
            tree_eval(&inners[1], &c, &tvs(&xs[2..3])).unwrap(),
            tree_eval(&inners[2], &c, &tvs(&xs[3..6])).unwrap(),
        ];
        let nested = tree_eval(&outer, &c, &blocks).unwrap().value();
        assert!((full - nested).abs() <= 1e-8);
    }

    #[test]
    fn infinite_leaf_prunes() {
        let c = ctx(Measure::tsallis(1.5).unwrap(), 1.0);
        let t = parse_tree("(2 ((1 4) 3) (5 6))").unwrap();
        let xs = [0.1, -0.4, 0.9, 1.3, -1.0, 0.2];
        for k in 1..=6 {
            let mut with_inf = tvs(&xs);
            with_inf[k - 1] = TropicalValue::INFINITY;
            let reduced: Vec<f64> = xs
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != k - 1)
                .map(|(_, &x)| x)
                .collect();
            let a = tree_eval(&t, &c, &with_inf).unwrap().value();
            let b = tree_eval(&t.prune(k).unwrap(), &c, &tvs(&reduced))
                .unwrap()
                .value();
            assert!((a - b).abs() <= 1e-8, "leaf {k}: {a} vs {b}");
        }
    }

    #[test]
    fn internal_alpha_examples() {
        let c = ctx(Measure::shannon(), 1.0);
        let h: BTreeMap<usize, f64> = [(2, 0.7), (3, 1.1), (5, 1.9)].into_iter().collect();
        assert_eq!(
            internal_alpha(&GuessingTree::unit(), &h, &c)
                .unwrap()
                .value(),
            0.0
        );
        assert_eq!(
            internal_alpha(&GuessingTree::corolla(5).unwrap(), &h, &c)
                .unwrap()
                .value(),
            1.9
        );
        let t = parse_tree("((1 2 3 4 5) ((6 7 8) (9 12) (10 11)))").unwrap();
        let fam = NaryFamily::chain(Measure::shannon());
        let inner = oplus_nary(&c, &tvs(&[1.1, 0.7, 0.7]), &fam)
            .unwrap()
            .value();
        let want = 0.7 + oplus(&c, tv(1.9), tv(1.1 + inner)).unwrap().value.value();
        let got = internal_alpha(&t, &h, &c).unwrap().value();
        assert!((got - want).abs() <= 1e-12);
        let missing: BTreeMap<usize, f64> = [(2, 0.7)].into_iter().collect();
        assert!(matches!(
            internal_alpha(&t, &missing, &c),
            Err(Error::MissingArity(5))
        ));
    }

    #[test]
    fn relation_defects() {
        let sh = ctx(Measure::shannon(), 1.0);
        let trees = enumerate_trees(4, 2).unwrap();
        for t in trees.iter().step_by(7) {
            assert!(relation_defect(&trees[0], t, &sh, 10, 3).unwrap() <= 1e-5);
        }
        let r = ctx(Measure::renyi(0.5).unwrap(), 1.0);
        let a = parse_tree("((1 2) 3)").unwrap();
        let b = parse_tree("(1 (2 3))").unwrap();
        assert!(relation_defect(&a, &b, &r, 20, 3).unwrap() > 1e-3);
        for t in enumerate_trees(3, 2).unwrap() {
            assert!(relation_defect(&t, &t.mirror(), &r, 10, 1).unwrap() <= 1e-6);
        }
        assert_eq!(
            relation_defect(&a, &b, &r, 20, 3).unwrap(),
            relation_defect(&a, &b, &r, 20, 3).unwrap()
        );
        assert!(relation_defect(&a, &GuessingTree::unit(), &r, 1, 0).is_err());
    }
}
