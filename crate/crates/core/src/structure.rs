//! Series/parallel composition trees over `K` distinct components.
//!
//! Components are labelled `c1..cK` in expressions and indexed `0..K`
//! internally. Every component appears in exactly one leaf, so the
//! reliability polynomial is multilinear and the system lifetime is the
//! min/max composition of component lifetimes.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    Series,
    Parallel,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    /// Zero-based component index.
    Leaf(usize),
    Composite(Kind, Vec<Node>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructureTree {
    root: Node,
    k: usize,
}

/// Component reliabilities `p_1..p_K`, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityVector(Vec<f64>);

impl ReliabilityVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if let Some(&bad) = p.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidProbability(bad));
        }
        Ok(Self(p))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl StructureTree {
    /// Builds a tree from a root node, checking the leaf-index invariants.
    pub fn from_root(root: Node) -> Result<Self> {
        let mut seen = Vec::new();
        collect_leaves(&root, &mut seen)?;
        let k = seen.len();
        Ok(Self { root, k })
    }

    /// `series(c1,...,cK)`; with `k == 1` this is the single leaf `c1`.
    pub fn series(k: usize) -> Result<Self> {
        Self::flat(Kind::Series, k)
    }

    pub fn parallel(k: usize) -> Result<Self> {
        Self::flat(Kind::Parallel, k)
    }

    fn flat(kind: Kind, k: usize) -> Result<Self> {
        match k {
            0 => Err(Error::InvalidParameter(
                "component count must be >= 1".into(),
            )),
            1 => Self::from_root(Node::Leaf(0)),
            _ => Self::from_root(Node::Composite(kind, (0..k).map(Node::Leaf).collect())),
        }
    }

    pub fn parse(expr: &str) -> Result<Self> {
        let mut p = Parser {
            src: expr.as_bytes(),
            pos: 0,
        };
        let root = p.node()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err("trailing input"));
        }
        Self::from_root(root)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// `Some(kind)` when the tree is a single composite whose children are
    /// all leaves, i.e. a homogeneous series or parallel system.
    pub fn homogeneous_kind(&self) -> Option<Kind> {
        match &self.root {
            Node::Composite(kind, children)
                if children.iter().all(|c| matches!(c, Node::Leaf(_))) =>
            {
                Some(*kind)
            }
            _ => None,
        }
    }

    /// Binary structure function.
    pub fn phi(&self, x: &[bool]) -> Result<bool> {
        self.check_len(x.len())?;
        Ok(phi_node(&self.root, x))
    }

    /// Reliability polynomial `h(p)`.
    pub fn h(&self, p: &ReliabilityVector) -> Result<f64> {
        self.check_len(p.0.len())?;
        Ok(self.reliability(&p.0))
    }

    /// Unchecked `h`; `p.len()` must equal `k()`.
    pub fn reliability(&self, p: &[f64]) -> f64 {
        debug_assert_eq!(p.len(), self.k);
        h_node(&self.root, p)
    }

    /// Reliability importance of the zero-based component `j` by pivotal
    /// decomposition, `h(p, 1_j) - h(p, 0_j)`.
    pub fn importance(&self, p: &ReliabilityVector, j: usize) -> Result<f64> {
        self.check_len(p.0.len())?;
        if j >= self.k {
            return Err(Error::IndexOutOfRange {
                index: j + 1,
                k: self.k,
            });
        }
        let mut scratch = p.0.clone();
        Ok(self.importance_unchecked(&mut scratch, j))
    }

    /// Importance against a scratch copy of `p`; restores `p[j]` on return.
    pub fn importance_unchecked(&self, p: &mut [f64], j: usize) -> f64 {
        let orig = p[j];
        p[j] = 1.0;
        let up = h_node(&self.root, p);
        p[j] = 0.0;
        let down = h_node(&self.root, p);
        p[j] = orig;
        up - down
    }

    /// All `K` importances at `p`.
    pub fn importances(&self, p: &[f64], out: &mut [f64]) {
        let mut scratch = p.to_vec();
        for (j, slot) in out.iter_mut().enumerate() {
            *slot = self.importance_unchecked(&mut scratch, j);
        }
    }

    /// System lifetime from component lifetimes (series -> min, parallel -> max).
    pub fn system_lifetime(&self, t: &[f64]) -> Result<f64> {
        self.check_len(t.len())?;
        if let Some(&bad) = t.iter().find(|v| v.is_nan() || **v < 0.0) {
            return Err(Error::InvalidTime(bad));
        }
        Ok(lifetime_node(&self.root, t))
    }

    pub(crate) fn lifetime_unchecked(&self, t: &[f64]) -> f64 {
        lifetime_node(&self.root, t)
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.k {
            return Err(Error::LengthMismatch {
                expected: self.k,
                actual: n,
            });
        }
        Ok(())
    }
}

impl FromStr for StructureTree {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl fmt::Display for StructureTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_node(&self.root, f)
    }
}

fn fmt_node(node: &Node, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match node {
        Node::Leaf(j) => write!(f, "c{}", j + 1),
        Node::Composite(kind, children) => {
            f.write_str(match kind {
                Kind::Series => "series(",
                Kind::Parallel => "parallel(",
            })?;
            for (i, c) in children.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                fmt_node(c, f)?;
            }
            f.write_str(")")
        }
    }
}

fn collect_leaves(node: &Node, seen: &mut Vec<bool>) -> Result<()> {
    fn walk(node: &Node, seen: &mut Vec<bool>) -> Result<()> {
        match node {
            Node::Leaf(j) => {
                if *j >= seen.len() {
                    seen.resize(j + 1, false);
                }
                if seen[*j] {
                    return Err(Error::DuplicateComponent(j + 1));
                }
                seen[*j] = true;
                Ok(())
            }
            Node::Composite(_, children) => {
                if children.len() < 2 {
                    return Err(Error::TooFewChildren);
                }
                children.iter().try_for_each(|c| walk(c, seen))
            }
        }
    }
    walk(node, seen)?;
    match seen.iter().position(|s| !s) {
        Some(missing) => Err(Error::MissingComponent(missing + 1)),
        None => Ok(()),
    }
}

fn phi_node(node: &Node, x: &[bool]) -> bool {
    match node {
        Node::Leaf(j) => x[*j],
        Node::Composite(Kind::Series, ch) => ch.iter().all(|c| phi_node(c, x)),
        Node::Composite(Kind::Parallel, ch) => ch.iter().any(|c| phi_node(c, x)),
    }
}

fn h_node(node: &Node, p: &[f64]) -> f64 {
    match node {
        Node::Leaf(j) => p[*j],
        Node::Composite(Kind::Series, ch) => ch.iter().map(|c| h_node(c, p)).product(),
        Node::Composite(Kind::Parallel, ch) => {
            1.0 - ch.iter().map(|c| 1.0 - h_node(c, p)).product::<f64>()
        }
    }
}

fn lifetime_node(node: &Node, t: &[f64]) -> f64 {
    match node {
        Node::Leaf(j) => t[*j],
        Node::Composite(Kind::Series, ch) => ch
            .iter()
            .map(|c| lifetime_node(c, t))
            .fold(f64::INFINITY, f64::min),
        Node::Composite(Kind::Parallel, ch) => {
            ch.iter().map(|c| lifetime_node(c, t)).fold(0.0, f64::max)
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Syntax {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, lit: &str) -> bool {
        if self.src[self.pos..].starts_with(lit.as_bytes()) {
            self.pos += lit.len();
            true
        } else {
            false
        }
    }

    fn node(&mut self) -> Result<Node> {
        self.skip_ws();
        let kind = if self.eat("series") {
            Kind::Series
        } else if self.eat("parallel") {
            Kind::Parallel
        } else if self.eat("c") {
            return self.leaf();
        } else {
            return Err(self.err("expected `cN`, `series(` or `parallel(`"));
        };
        self.skip_ws();
        if !self.eat("(") {
            return Err(self.err("expected `(`"));
        }
        let mut children = vec![self.node()?];
        loop {
            self.skip_ws();
            if self.eat(",") {
                children.push(self.node()?);
            } else if self.eat(")") {
                break;
            } else {
                return Err(self.err("expected `,` or `)`"));
            }
        }
        if children.len() < 2 {
            return Err(Error::TooFewChildren);
        }
        Ok(Node::Composite(kind, children))
    }

    fn leaf(&mut self) -> Result<Node> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let digits = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        match digits.parse::<usize>() {
            Ok(idx) if idx >= 1 => Ok(Node::Leaf(idx - 1)),
            _ => Err(Error::Syntax {
                pos: start,
                msg: "expected component index >= 1".into(),
            }),
        }
    }
}
