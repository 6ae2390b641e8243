//! Operadic composition of trees and of probability distributions.

use super::{GuessingTree, Node};
use crate::entropy::{check_simplex, SIMPLEX_SUM_TOL};
use crate::error::{Error, Result};

/// Replaces the leaf labelled `i` with `inners[i - 1]`. Inner labels are
/// shifted past the leaves of all earlier blocks, so block `i` owns a
/// contiguous label range. The result keeps the outer arity bound, except
/// that grafting into the unit returns the inner tree unchanged.
pub fn graft(outer: &GuessingTree, inners: &[GuessingTree]) -> Result<GuessingTree> {
    let n = outer.leaf_count();
    if inners.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: inners.len(),
        });
    }
    if n == 1 {
        return Ok(inners[0].clone());
    }
    let v = outer.arity_bound();
    if let Some(t) = inners.iter().find(|t| t.root().max_arity() > v) {
        return Err(Error::Arity {
            arity: t.root().max_arity(),
            bound: v,
        });
    }
    let mut offsets = Vec::with_capacity(n);
    let mut acc = 0;
    for t in inners {
        offsets.push(acc);
        acc += t.leaf_count();
    }
    fn go(node: &Node, inners: &[GuessingTree], offsets: &[usize]) -> Node {
        match node {
            Node::Leaf(l) => {
                let shift = offsets[l - 1];
                inners[l - 1].root().map_labels(&|k| k + shift)
            }
            Node::Branch(c) => Node::Branch(c.iter().map(|k| go(k, inners, offsets)).collect()),
        }
    }
    GuessingTree::new(go(outer.root(), inners, &offsets), v)
}

/// `γ(p; q_1, …, q_n) = (p_1 q_11, …, p_1 q_1m_1, p_2 q_21, …)`.
pub fn prob_compose(p: &[f64], qs: &[Vec<f64>]) -> Result<Vec<f64>> {
    if qs.len() != p.len() {
        return Err(Error::LengthMismatch {
            expected: p.len(),
            got: qs.len(),
        });
    }
    check_simplex(p)?;
    for q in qs {
        check_simplex(q)?;
    }
    let out: Vec<f64> = p
        .iter()
        .zip(qs)
        .flat_map(|(&pi, q)| q.iter().map(move |&qj| pi * qj))
        .collect();
    debug_assert!((out.iter().sum::<f64>() - 1.0).abs() <= 4.0 * SIMPLEX_SUM_TOL);
    Ok(out)
}
