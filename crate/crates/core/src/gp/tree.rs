use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

use crate::features::{FeatureVector, NUM_FEATURES};

/// Results are clamped to `[-SATURATION, SATURATION]` after every operation.
pub const SATURATION: f64 = 1e12;

/// Deepest tree the representation accepts, whatever the evolution bound.
pub const DEPTH_LIMIT: usize = 17;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Op {
    Add,
    Sub,
    Mul,
    /// Protected division: `a / 0 = 1`.
    Div,
    Min,
    Max,
}

impl Op {
    pub const ALL: [Op; 6] = [Op::Add, Op::Sub, Op::Mul, Op::Div, Op::Min, Op::Max];

    #[inline]
    pub fn apply(self, a: f64, b: f64) -> f64 {
        let v = match self {
            Op::Add => a + b,
            Op::Sub => a - b,
            Op::Mul => a * b,
            Op::Div => {
                if b == 0.0 {
                    1.0
                } else {
                    a / b
                }
            }
            Op::Min => a.min(b),
            Op::Max => a.max(b),
        };
        v.clamp(-SATURATION, SATURATION)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Op::Add => "+",
            Op::Sub => "-",
            Op::Mul => "*",
            Op::Div => "/",
            Op::Min => "min",
            Op::Max => "max",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        Op::ALL.into_iter().find(|op| op.symbol() == s)
    }
}

/// One node of a tree in prefix order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Gene {
    Feature(u8),
    Func(Op),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("prefix sequence is not a single complete tree")]
    Malformed,
    #[error("terminal x{0} is out of range")]
    BadTerminal(u8),
    #[error("tree depth {0} exceeds the limit of {DEPTH_LIMIT}")]
    TooDeep(usize),
    #[error("parse error at byte {at}: {msg}")]
    Parse { at: usize, msg: &'static str },
}

/// Urgency function: a binary expression tree over the 16 phase features,
/// stored in prefix order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExprTree {
    genes: Vec<Gene>,
}

impl ExprTree {
    pub fn from_prefix(genes: Vec<Gene>) -> Result<Self, TreeError> {
        let mut open = 1usize;
        for g in &genes {
            if open == 0 {
                return Err(TreeError::Malformed);
            }
            match *g {
                Gene::Feature(k) if k as usize >= NUM_FEATURES => return Err(TreeError::BadTerminal(k)),
                Gene::Feature(_) => open -= 1,
                Gene::Func(_) => open += 1,
            }
        }
        if open != 0 {
            return Err(TreeError::Malformed);
        }
        let tree = ExprTree { genes };
        let depth = tree.depth();
        if depth > DEPTH_LIMIT {
            return Err(TreeError::TooDeep(depth));
        }
        Ok(tree)
    }

    /// Single-terminal tree `x<index>`.
    ///
    /// # Panics
    /// If `index >= 16`.
    pub fn feature(index: u8) -> Self {
        assert!((index as usize) < NUM_FEATURES, "feature index out of range");
        ExprTree {
            genes: alloc::vec![Gene::Feature(index)],
        }
    }

    pub fn func(op: Op, left: &ExprTree, right: &ExprTree) -> Self {
        let mut genes = Vec::with_capacity(1 + left.len() + right.len());
        genes.push(Gene::Func(op));
        genes.extend_from_slice(&left.genes);
        genes.extend_from_slice(&right.genes);
        ExprTree { genes }
    }

    pub fn genes(&self) -> &[Gene] {
        &self.genes
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    /// Depth with a lone terminal counting as 1.
    pub fn depth(&self) -> usize {
        let mut max = 0;
        // remaining children to fill at each open level
        let mut stack: Vec<u8> = Vec::with_capacity(DEPTH_LIMIT + 1);
        for g in &self.genes {
            let level = stack.len() + 1;
            max = max.max(level);
            match g {
                Gene::Func(_) => stack.push(2),
                Gene::Feature(_) => {
                    while let Some(top) = stack.last_mut() {
                        *top -= 1;
                        if *top > 0 {
                            break;
                        }
                        stack.pop();
                    }
                }
            }
        }
        max
    }

    /// Depth (1-based) of every node, in prefix order.
    pub fn node_depths(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.genes.len());
        let mut stack: Vec<u8> = Vec::new();
        for g in &self.genes {
            out.push(stack.len() + 1);
            match g {
                Gene::Func(_) => stack.push(2),
                Gene::Feature(_) => {
                    while let Some(top) = stack.last_mut() {
                        *top -= 1;
                        if *top > 0 {
                            break;
                        }
                        stack.pop();
                    }
                }
            }
        }
        out
    }

    /// One past the last gene of the subtree rooted at `start`.
    pub fn subtree_end(&self, start: usize) -> usize {
        let mut need = 1usize;
        let mut i = start;
        while need > 0 {
            match self.genes[i] {
                Gene::Func(_) => need += 1,
                Gene::Feature(_) => need -= 1,
            }
            i += 1;
        }
        i
    }

    pub fn subtree(&self, start: usize) -> ExprTree {
        ExprTree {
            genes: self.genes[start..self.subtree_end(start)].to_vec(),
        }
    }

    /// Copy of `self` with the subtree at `at` replaced by `donor`.
    pub fn replace_subtree(&self, at: usize, donor: &ExprTree) -> ExprTree {
        let end = self.subtree_end(at);
        let mut genes = Vec::with_capacity(self.len() - (end - at) + donor.len());
        genes.extend_from_slice(&self.genes[..at]);
        genes.extend_from_slice(&donor.genes);
        genes.extend_from_slice(&self.genes[end..]);
        ExprTree { genes }
    }

    pub fn eval(&self, x: &FeatureVector) -> f64 {
        self.eval_slice(&x.0)
    }

    pub fn eval_slice(&self, x: &[f64; NUM_FEATURES]) -> f64 {
        let mut pos = 0;
        eval_from(&self.genes, &mut pos, x)
    }

    /// Occurrences of each terminal.
    pub fn terminal_counts(&self) -> [usize; NUM_FEATURES] {
        let mut counts = [0; NUM_FEATURES];
        for g in &self.genes {
            if let Gene::Feature(k) = g {
                counts[*k as usize] += 1;
            }
        }
        counts
    }

    /// Whether every function node has two children and the sequence forms one tree.
    pub fn is_well_formed(&self) -> bool {
        !self.genes.is_empty() && self.subtree_end(0) == self.genes.len()
    }
}

fn eval_from(genes: &[Gene], pos: &mut usize, x: &[f64; NUM_FEATURES]) -> f64 {
    let g = genes[*pos];
    *pos += 1;
    match g {
        Gene::Feature(k) => x[k as usize],
        Gene::Func(op) => {
            let a = eval_from(genes, pos, x);
            let b = eval_from(genes, pos, x);
            op.apply(a, b)
        }
    }
}

impl fmt::Display for ExprTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn write_at(genes: &[Gene], pos: &mut usize, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            let g = genes[*pos];
            *pos += 1;
            match g {
                Gene::Feature(k) => write!(f, "x{k}"),
                Gene::Func(op) => {
                    write!(f, "({} ", op.symbol())?;
                    write_at(genes, pos, f)?;
                    f.write_str(" ")?;
                    write_at(genes, pos, f)?;
                    f.write_str(")")
                }
            }
        }
        let mut pos = 0;
        write_at(&self.genes, &mut pos, f)
    }
}

struct Parser<'s> {
    src: &'s str,
    at: usize,
}

impl<'s> Parser<'s> {
    fn skip_ws(&mut self) {
        let rest = &self.src[self.at..];
        self.at += rest.len() - rest.trim_start().len();
    }

    fn err(&self, msg: &'static str) -> TreeError {
        TreeError::Parse { at: self.at, msg }
    }

    fn atom(&mut self) -> &'s str {
        let rest = &self.src[self.at..];
        let n = rest
            .find(|c: char| c.is_whitespace() || c == '(' || c == ')')
            .unwrap_or(rest.len());
        self.at += n;
        &rest[..n]
    }

    fn expr(&mut self, out: &mut Vec<Gene>, depth: usize) -> Result<(), TreeError> {
        if depth > DEPTH_LIMIT {
            return Err(TreeError::TooDeep(depth));
        }
        self.skip_ws();
        match self.src[self.at..].chars().next() {
            None => Err(self.err("unexpected end of input")),
            Some(')') => Err(self.err("unexpected `)`")),
            Some('(') => {
                self.at += 1;
                self.skip_ws();
                let start = self.at;
                let sym = self.atom();
                let op = Op::from_symbol(sym).ok_or(TreeError::Parse {
                    at: start,
                    msg: "unknown function",
                })?;
                out.push(Gene::Func(op));
                self.expr(out, depth + 1)?;
                self.expr(out, depth + 1)?;
                self.skip_ws();
                if !self.src[self.at..].starts_with(')') {
                    return Err(self.err("expected `)` after two arguments"));
                }
                self.at += 1;
                Ok(())
            }
            Some(_) => {
                let start = self.at;
                let tok = self.atom();
                let index = tok
                    .strip_prefix('x')
                    .filter(|d| {
                        !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()) && (d.len() == 1 || !d.starts_with('0'))
                    })
                    .and_then(|d| d.parse::<u8>().ok())
                    .filter(|&k| (k as usize) < NUM_FEATURES)
                    .ok_or(TreeError::Parse {
                        at: start,
                        msg: "expected a terminal x0..x15",
                    })?;
                out.push(Gene::Feature(index));
                Ok(())
            }
        }
    }
}

impl FromStr for ExprTree {
    type Err = TreeError;

    /// Parses prefix S-expressions such as `(+ (min x0 x12) x1)`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parser = Parser { src: s, at: 0 };
        let mut genes = Vec::new();
        parser.expr(&mut genes, 1)?;
        parser.skip_ws();
        if parser.at != s.len() {
            return Err(parser.err("trailing input"));
        }
        ExprTree::from_prefix(genes)
    }
}

impl ExprTree {
    pub fn to_sexpr(&self) -> String {
        alloc::format!("{self}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    /// Printed form of the evolved example: x9 + min(x0, min(x12, x0 + x1)) + x1 + (x0 + x1).
    pub(crate) const EXAMPLE: &str = "(+ (+ x9 (min x0 (min x12 (+ x0 x1)))) (+ x1 (+ x0 x1)))";

    fn x_with(pairs: &[(usize, f64)]) -> FeatureVector {
        let mut x = [0.0; 16];
        for &(i, v) in pairs {
            x[i] = v;
        }
        FeatureVector(x)
    }

    #[test]
    fn protected_division() {
        let t: ExprTree = "(/ x3 x4)".parse().unwrap();
        assert_eq!(t.eval(&x_with(&[(3, 7.0)])), 1.0);
        assert_eq!(t.eval(&x_with(&[])), 1.0);
        assert_eq!(t.eval(&x_with(&[(3, 6.0), (4, 3.0)])), 2.0);
        assert_eq!(Op::Div.apply(-5.0, 0.0), 1.0);
    }

    #[test]
    fn example_tree_value() {
        let t: ExprTree = EXAMPLE.parse().unwrap();
        let x = x_with(&[(0, 2.0), (1, 1.0), (9, 4.0), (12, 3.0)]);
        assert_eq!(t.eval(&x), 10.0);
        assert_eq!(ExprTree::feature(7).eval(&x_with(&[(7, 4.5)])), 4.5);
    }

    #[test]
    fn min_max_and_saturation() {
        assert_eq!(Op::Min.apply(2.0, -1.0), -1.0);
        assert_eq!(Op::Max.apply(2.0, -1.0), 2.0);
        assert_eq!(Op::Mul.apply(1e9, 1e9), SATURATION);
        assert_eq!(Op::Sub.apply(-1e12, 1e12), -SATURATION);
        assert_eq!(Op::Div.apply(1.0, 1e-300), SATURATION);
    }

    #[test]
    fn depth_and_subtrees() {
        let t: ExprTree = EXAMPLE.parse().unwrap();
        assert_eq!(t.depth(), 6);
        assert_eq!(t.len(), 15);
        assert_eq!(ExprTree::feature(0).depth(), 1);
        let node_depths = t.node_depths();
        assert_eq!(node_depths.iter().copied().max(), Some(6));
        // second gene is the `(+ x9 ...)` node
        assert_eq!(t.subtree(1).to_string(), "(+ x9 (min x0 (min x12 (+ x0 x1))))");
        let swapped = t.replace_subtree(1, &ExprTree::feature(5));
        assert_eq!(swapped.to_string(), "(+ x5 (+ x1 (+ x0 x1)))");
        assert!(swapped.is_well_formed());
    }

    #[test]
    fn parse_errors() {
        for bad in [
            "",
            "x16",
            "(+ x1)",
            "(+ x1 x2 x3)",
            "(pow x1 x2)",
            "(+ x1 x2",
            "x1 x2",
            "y3",
            "x01",
            ")",
        ] {
            assert!(bad.parse::<ExprTree>().is_err(), "{bad:?} parsed");
        }
        assert_eq!(
            ExprTree::from_prefix(alloc::vec![Gene::Feature(20)]),
            Err(TreeError::BadTerminal(20))
        );
        assert_eq!(
            ExprTree::from_prefix(alloc::vec![Gene::Feature(1), Gene::Feature(2)]),
            Err(TreeError::Malformed)
        );
    }

    #[test]
    fn whitespace_is_normalised() {
        let t: ExprTree = "  ( max\n x3 (+  x3 x5 ) )".parse().unwrap();
        assert_eq!(t.to_string(), "(max x3 (+ x3 x5))");
    }

    #[test]
    fn terminal_counts() {
        let t: ExprTree = EXAMPLE.parse().unwrap();
        let c = t.terminal_counts();
        assert_eq!((c[0], c[1], c[9], c[12]), (3, 3, 1, 1));
        assert_eq!(c.iter().sum::<usize>(), 8);
    }
}
