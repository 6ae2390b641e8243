//! Text form of guessing trees: `TREE := LABEL | '(' TREE (WS TREE)+ ')'`.

use super::{GuessingTree, Node};
use crate::error::{Error, Result};

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::TreeParse {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn tree(&mut self) -> Result<Node> {
        self.skip_ws();
        match self.src.get(self.pos) {
            None => Err(self.err("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let mut children = Vec::new();
                loop {
                    self.skip_ws();
                    match self.src.get(self.pos) {
                        Some(b')') => {
                            self.pos += 1;
                            break;
                        }
                        None => return Err(self.err("unclosed `(`")),
                        Some(_) => {
                            let start = self.pos;
                            let child = self.tree()?;
                            // Adjacent labels need whitespace; `(12)` is one label.
                            if matches!(child, Node::Leaf(_))
                                && self.src.get(self.pos).is_some_and(|c| c.is_ascii_digit())
                            {
                                self.pos = start;
                                return Err(self.err("labels must be separated"));
                            }
                            children.push(child);
                        }
                    }
                }
                if children.is_empty() {
                    return Err(self.err("empty node `()`"));
                }
                Ok(Node::Branch(children))
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
                let label: usize = text.parse().map_err(|_| Error::TreeParse {
                    pos: start,
                    msg: format!("label `{text}` is too large"),
                })?;
                if label == 0 {
                    return Err(Error::TreeParse {
                        pos: start,
                        msg: "labels start at 1".into(),
                    });
                }
                Ok(Node::Leaf(label))
            }
            Some(&c) => Err(self.err(format!("unexpected character `{}`", c as char))),
        }
    }
}

/// Parses and validates a tree; its arity bound is its largest arity.
pub fn parse_tree(text: &str) -> Result<GuessingTree> {
    let root = parse_node(text)?;
    let bound = root.max_arity().max(2);
    GuessingTree::new(root, bound)
}

/// Parses a tree and checks it against the arity bound `v`.
pub fn parse_tree_bounded(text: &str, v: usize) -> Result<GuessingTree> {
    GuessingTree::new(parse_node(text)?, v)
}

fn parse_node(text: &str) -> Result<Node> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let root = p.tree()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("trailing input"));
    }
    Ok(root)
}
