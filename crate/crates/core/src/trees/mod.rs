//! Guessing trees: rooted ordered trees with labelled leaves and internal
//! arities in `[2, v]`. Leaf `k` stands for outcome `k`, so it reads
//! `xs[k - 1]` and `probs[k - 1]`.

mod eval;
mod operad;
mod parse;

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

pub use eval::{
    internal_alpha, relation_defect, tree_entropy, tree_eval, tree_eval_oracle,
    tree_eval_oracle_with, tree_eval_with, ORACLE_MAX_LEAVES,
};
pub use operad::{graft, prob_compose};
pub use parse::{parse_tree, parse_tree_bounded};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Leaf(usize),
    Branch(Vec<Node>),
}

impl Node {
    pub fn leaf_count(&self) -> usize {
        match self {
            Node::Leaf(_) => 1,
            Node::Branch(c) => c.iter().map(Node::leaf_count).sum(),
        }
    }

    /// Labels in left-to-right order.
    pub fn labels(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_labels(&mut out);
        out
    }

    fn collect_labels(&self, out: &mut Vec<usize>) {
        match self {
            Node::Leaf(l) => out.push(*l),
            Node::Branch(c) => c.iter().for_each(|n| n.collect_labels(out)),
        }
    }

    /// Largest number of children at any node; 0 for a leaf.
    pub fn max_arity(&self) -> usize {
        match self {
            Node::Leaf(_) => 0,
            Node::Branch(c) => c.iter().map(Node::max_arity).fold(c.len(), usize::max),
        }
    }

    fn min_arity(&self) -> Option<usize> {
        match self {
            Node::Leaf(_) => None,
            Node::Branch(c) => c.iter().filter_map(Node::min_arity).chain([c.len()]).min(),
        }
    }

    fn map_labels(&self, f: &impl Fn(usize) -> usize) -> Node {
        match self {
            Node::Leaf(l) => Node::Leaf(f(*l)),
            Node::Branch(c) => Node::Branch(c.iter().map(|n| n.map_labels(f)).collect()),
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Leaf(l) => write!(f, "{l}"),
            Node::Branch(c) => {
                f.write_str("(")?;
                for (i, n) in c.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{n}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// A validated `(n, v)`-tree.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GuessingTree {
    root: Node,
    n: usize,
    v: usize,
}

impl GuessingTree {
    pub fn new(root: Node, v: usize) -> Result<Self> {
        if v < 2 {
            return Err(Error::domain("v", v as f64, "[2, ∞)"));
        }
        if let Some(a) = root.min_arity().filter(|&a| a < 2) {
            return Err(Error::Arity { arity: a, bound: v });
        }
        let max = root.max_arity();
        if max > v {
            return Err(Error::Arity {
                arity: max,
                bound: v,
            });
        }
        let n = root.leaf_count();
        let mut seen = vec![false; n];
        for l in root.labels() {
            if l == 0 || l > n {
                return Err(Error::Labels {
                    n,
                    msg: format!("label {l} is out of range"),
                });
            }
            if std::mem::replace(&mut seen[l - 1], true) {
                return Err(Error::Labels {
                    n,
                    msg: format!("label {l} appears twice"),
                });
            }
        }
        Ok(GuessingTree { root, n, v })
    }

    /// The single-leaf tree, unit of grafting.
    pub fn unit() -> Self {
        GuessingTree {
            root: Node::Leaf(1),
            n: 1,
            v: 2,
        }
    }

    /// The tree with one root and `m` leaves labelled in order.
    pub fn corolla(m: usize) -> Result<Self> {
        GuessingTree::new(Node::Branch((1..=m).map(Node::Leaf).collect()), m.max(2))
    }

    /// The left comb `((..((1 2) 3)..) n)`.
    pub fn left_comb(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("n", 0.0, "[1, ∞)"));
        }
        let mut node = Node::Leaf(1);
        for k in 2..=n {
            node = Node::Branch(vec![node, Node::Leaf(k)]);
        }
        GuessingTree::new(node, 2)
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn leaf_count(&self) -> usize {
        self.n
    }

    pub fn arity_bound(&self) -> usize {
        self.v
    }

    pub fn labels(&self) -> Vec<usize> {
        self.root.labels()
    }

    /// Same tree, checked against a different arity bound.
    pub fn with_bound(&self, v: usize) -> Result<Self> {
        GuessingTree::new(self.root.clone(), v)
    }

    /// Replaces every label `k` with `perm[k - 1]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: perm.len(),
            });
        }
        let root = self.root.map_labels(&|l| perm[l - 1]);
        GuessingTree::new(root, self.v)
    }

    /// Reverses the children of every node; labels stay with their leaves.
    pub fn mirror(&self) -> Self {
        fn go(n: &Node) -> Node {
            match n {
                Node::Leaf(l) => Node::Leaf(*l),
                Node::Branch(c) => Node::Branch(c.iter().rev().map(go).collect()),
            }
        }
        GuessingTree {
            root: go(&self.root),
            n: self.n,
            v: self.v,
        }
    }

    /// Removes leaf `label`, splices out nodes left with one child and
    /// renumbers the labels above `label` down by one.
    pub fn prune(&self, label: usize) -> Result<Self> {
        if self.n < 2 {
            return Err(Error::Unsupported("cannot prune the unit tree".into()));
        }
        if label == 0 || label > self.n {
            return Err(Error::Labels {
                n: self.n,
                msg: format!("no leaf labelled {label}"),
            });
        }
        fn go(n: &Node, label: usize) -> Option<Node> {
            match n {
                Node::Leaf(l) if *l == label => None,
                Node::Leaf(l) => Some(Node::Leaf(if *l > label { l - 1 } else { *l })),
                Node::Branch(c) => {
                    let mut kept: Vec<Node> = c.iter().filter_map(|k| go(k, label)).collect();
                    if kept.len() == 1 {
                        kept.pop()
                    } else {
                        Some(Node::Branch(kept))
                    }
                }
            }
        }
        let root = go(&self.root, label).expect("tree has another leaf");
        GuessingTree::new(root, self.v)
    }
}

impl fmt::Display for GuessingTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

impl FromStr for GuessingTree {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_tree(s)
    }
}

/// Largest `n` accepted by the exhaustive enumerators.
pub const ENUMERATE_MAX_LEAVES: usize = 6;

/// Unlabelled shapes with `n` leaves and arities in `[2, v]`, leaves
/// numbered left to right.
pub fn tree_shapes(n: usize, v: usize) -> Result<Vec<GuessingTree>> {
    if n == 0 || n > ENUMERATE_MAX_LEAVES {
        return Err(Error::TooLarge {
            n,
            max: ENUMERATE_MAX_LEAVES,
        });
    }
    if v < 2 {
        return Err(Error::domain("v", v as f64, "[2, ∞)"));
    }
    fn shapes(n: usize, v: usize) -> Vec<Node> {
        if n == 1 {
            return vec![Node::Leaf(0)];
        }
        let mut out = Vec::new();
        for m in 2..=v.min(n) {
            for parts in compositions(n, m) {
                let mut acc: Vec<Vec<Node>> = vec![Vec::new()];
                for &k in &parts {
                    let subs = shapes(k, v);
                    acc = acc
                        .into_iter()
                        .flat_map(|prefix| {
                            subs.iter().map(move |s| {
                                let mut p = prefix.clone();
                                p.push(s.clone());
                                p
                            })
                        })
                        .collect();
                }
                out.extend(acc.into_iter().map(Node::Branch));
            }
        }
        out
    }
    fn number(n: &Node, next: &mut usize) -> Node {
        match n {
            Node::Leaf(_) => {
                *next += 1;
                Node::Leaf(*next)
            }
            Node::Branch(c) => Node::Branch(c.iter().map(|k| number(k, next)).collect()),
        }
    }
    shapes(n, v)
        .iter()
        .map(|s| GuessingTree::new(number(s, &mut 0), v))
        .collect()
}

/// Compositions of `n` into `m` positive parts.
fn compositions(n: usize, m: usize) -> Vec<Vec<usize>> {
    if m == 1 {
        return vec![vec![n]];
    }
    (1..=n - (m - 1))
        .flat_map(|first| {
            compositions(n - first, m - 1)
                .into_iter()
                .map(move |mut rest| {
                    rest.insert(0, first);
                    rest
                })
        })
        .collect()
}

/// Every labelled `(n, v)`-tree: each shape under each label permutation.
pub fn enumerate_trees(n: usize, v: usize) -> Result<Vec<GuessingTree>> {
    let shapes = tree_shapes(n, v)?;
    let perms = permutations(n);
    let mut out = Vec::with_capacity(shapes.len() * perms.len());
    for s in &shapes {
        for p in &perms {
            out.push(s.relabel(p)?);
        }
    }
    Ok(out)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(rest: &mut Vec<usize>, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            out.push(cur.clone());
            return;
        }
        for i in 0..rest.len() {
            let x = rest.remove(i);
            cur.push(x);
            go(rest, cur, out);
            cur.pop();
            rest.insert(i, x);
        }
    }
    let mut out = Vec::new();
    go(&mut (1..=n).collect(), &mut Vec::new(), &mut out);
    out
}

/// A random `(n, v)`-tree: arity uniform in `[2, min(v, n)]`, leaves split
/// by a uniform composition, labels uniformly permuted.
pub fn random_tree<R: Rng + ?Sized>(n: usize, v: usize, rng: &mut R) -> Result<GuessingTree> {
    if n == 0 {
        return Err(Error::domain("n", 0.0, "[1, ∞)"));
    }
    if v < 2 {
        return Err(Error::domain("v", v as f64, "[2, ∞)"));
    }
    fn build<R: Rng + ?Sized>(n: usize, v: usize, rng: &mut R) -> Node {
        if n == 1 {
            return Node::Leaf(0);
        }
        let m = rng.gen_range(2..=v.min(n));
        // Choose m - 1 distinct cut points among the n - 1 gaps.
        let mut cuts: Vec<usize> = (1..n).collect();
        cuts.shuffle(rng);
        let mut cuts = cuts[..m - 1].to_vec();
        cuts.sort_unstable();
        let mut prev = 0;
        let mut children = Vec::with_capacity(m);
        for c in cuts.into_iter().chain([n]) {
            children.push(build(c - prev, v, rng));
            prev = c;
        }
        Node::Branch(children)
    }
    let shape = build(n, v, rng);
    let mut labels: Vec<usize> = (1..=n).collect();
    labels.shuffle(rng);
    let mut it = labels.into_iter();
    fn assign(n: &Node, it: &mut impl Iterator<Item = usize>) -> Node {
        match n {
            Node::Leaf(_) => Node::Leaf(it.next().expect("one label per leaf")),
            Node::Branch(c) => Node::Branch(c.iter().map(|k| assign(k, it)).collect()),
        }
    }
    GuessingTree::new(assign(&shape, &mut it), v)
}
