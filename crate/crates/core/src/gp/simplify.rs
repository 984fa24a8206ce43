//! Algebraic simplification valid on non-negative inputs.
//!
//! Every feature is a vehicle count, so terminals are never negative. The
//! rewrites drop `min`/`max` arguments that are provably dominated by another
//! argument (`min(a, a + b) = a`, `max(a, a + b) = a + b` for `b >= 0`, and
//! `min(a, a) = a`). Results are checked against the input on a fixed sample of
//! non-negative integer points and discarded on any disagreement.

use alloc::boxed::Box;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::tree::{ExprTree, Gene, Op};
use crate::features::NUM_FEATURES;

const CHECK_SAMPLES: usize = 512;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Expr {
    X(u8),
    Bin(Op, Box<Expr>, Box<Expr>),
}

impl Expr {
    fn from_tree(tree: &ExprTree) -> Expr {
        fn go(genes: &[Gene], pos: &mut usize) -> Expr {
            let g = genes[*pos];
            *pos += 1;
            match g {
                Gene::Feature(k) => Expr::X(k),
                Gene::Func(op) => {
                    let a = go(genes, pos);
                    let b = go(genes, pos);
                    Expr::Bin(op, Box::new(a), Box::new(b))
                }
            }
        }
        go(tree.genes(), &mut 0)
    }

    fn push_genes(&self, out: &mut Vec<Gene>) {
        match self {
            Expr::X(k) => out.push(Gene::Feature(*k)),
            Expr::Bin(op, a, b) => {
                out.push(Gene::Func(*op));
                a.push_genes(out);
                b.push_genes(out);
            }
        }
    }

    fn to_tree(&self) -> ExprTree {
        let mut genes = Vec::new();
        self.push_genes(&mut genes);
        ExprTree::from_prefix(genes).expect("rewrites keep trees well formed")
    }

    fn nonneg(&self) -> bool {
        match self {
            Expr::X(_) => true,
            Expr::Bin(Op::Sub, ..) => false,
            Expr::Bin(Op::Max, a, b) => a.nonneg() || b.nonneg(),
            // a / 0 = 1, otherwise a quotient of non-negatives
            Expr::Bin(_, a, b) => a.nonneg() && b.nonneg(),
        }
    }

    /// Summands of a (possibly nested) sum.
    fn summands<'a>(&'a self, out: &mut Vec<&'a Expr>) {
        match self {
            Expr::Bin(Op::Add, a, b) => {
                a.summands(out);
                b.summands(out);
            }
            e => out.push(e),
        }
    }
}

/// Whether `a <= b` holds for every non-negative input.
fn provably_le(a: &Expr, b: &Expr) -> bool {
    if a == b {
        return true;
    }
    match b {
        Expr::Bin(Op::Add, p, q) => {
            if (provably_le(a, p) && q.nonneg()) || (provably_le(a, q) && p.nonneg()) {
                return true;
            }
        }
        Expr::Bin(Op::Max, p, q) if provably_le(a, p) || provably_le(a, q) => return true,
        _ => {}
    }
    match a {
        Expr::Bin(Op::Min, p, q) if provably_le(p, b) || provably_le(q, b) => return true,
        Expr::Bin(Op::Sub, p, q) if q.nonneg() && provably_le(p, b) => return true,
        _ => {}
    }
    sum_contained(a, b)
}

/// `b`'s summands include all of `a`'s and the leftovers are non-negative.
fn sum_contained(a: &Expr, b: &Expr) -> bool {
    let (mut sa, mut sb) = (Vec::new(), Vec::new());
    a.summands(&mut sa);
    b.summands(&mut sb);
    if sa.len() >= sb.len() {
        return false;
    }
    for term in sa {
        match sb.iter().position(|t| *t == term) {
            Some(i) => {
                sb.swap_remove(i);
            }
            None => return false,
        }
    }
    sb.iter().all(|t| t.nonneg())
}

fn flatten<'a>(op: Op, e: &'a Expr, out: &mut Vec<&'a Expr>) {
    match e {
        Expr::Bin(o, a, b) if *o == op => {
            flatten(op, a, out);
            flatten(op, b, out);
        }
        other => out.push(other),
    }
}

/// Balanced tree over `args` so rebuilding never adds depth.
fn rebuild(op: Op, args: &[Expr]) -> Expr {
    if args.len() == 1 {
        return args[0].clone();
    }
    let mid = args.len().div_ceil(2);
    Expr::Bin(
        op,
        Box::new(rebuild(op, &args[..mid])),
        Box::new(rebuild(op, &args[mid..])),
    )
}

/// Drops `min`/`max` arguments dominated by an earlier-kept argument.
fn prune_extremum(op: Op, node: Expr) -> Expr {
    let mut args = Vec::new();
    flatten(op, &node, &mut args);
    let n = args.len();
    let mut keep = alloc::vec![true; n];
    for i in 0..n {
        for j in 0..n {
            if i == j || !keep[j] || !keep[i] {
                continue;
            }
            // `j` makes `i` redundant when it is always at least as extreme
            let dominates = match op {
                Op::Min => provably_le(args[j], args[i]),
                _ => provably_le(args[i], args[j]),
            };
            let mutual = args[i] == args[j]
                || match op {
                    Op::Min => provably_le(args[i], args[j]),
                    _ => provably_le(args[j], args[i]),
                };
            // among equivalent arguments keep the first
            if dominates && (!mutual || j < i) {
                keep[i] = false;
            }
        }
    }
    if keep.iter().all(|&k| k) {
        return node;
    }
    let kept: Vec<Expr> = args
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(e, _)| (*e).clone())
        .collect();
    rebuild(op, &kept)
}

fn rewrite(e: Expr) -> Expr {
    match e {
        Expr::X(_) => e,
        Expr::Bin(op, a, b) => {
            let node = Expr::Bin(op, Box::new(rewrite(*a)), Box::new(rewrite(*b)));
            match op {
                Op::Min | Op::Max => prune_extremum(op, node),
                _ => node,
            }
        }
    }
}

/// Returns an equivalent tree on `[0, inf)^16`, never deeper or larger than the
/// input. Returns the input unchanged when nothing applies.
pub fn simplify(tree: &ExprTree) -> ExprTree {
    let out = rewrite(Expr::from_tree(tree)).to_tree();
    if out.len() >= tree.len() || out.depth() > tree.depth() || !agrees_on_samples(tree, &out) {
        return tree.clone();
    }
    out
}

fn agrees_on_samples(a: &ExprTree, b: &ExprTree) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    (0..CHECK_SAMPLES).all(|s| {
        let mut x = [0.0; NUM_FEATURES];
        if s > 0 {
            for v in &mut x {
                // mostly small counts, with zeros to exercise protected division
                *v = f64::from(rng.gen_range(0u32..12));
            }
        }
        a.eval_slice(&x) == b.eval_slice(&x)
    })
}
