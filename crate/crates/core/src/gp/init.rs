use alloc::vec::Vec;

use rand::Rng;

use super::tree::{ExprTree, Gene, Op};
use super::EvolutionConfig;
use crate::features::NUM_FEATURES;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitMethod {
    /// Functions everywhere above the target depth; every leaf at exactly that depth.
    Full,
    /// Random mix of functions and terminals down to the target depth.
    Grow,
}

/// Depth and method used for the `index`-th individual of a ramped
/// half-and-half population: depths cycle through
/// `init_min_depth..=max_depth`, and within each depth the individuals
/// alternate between full and grow.
pub fn ramp_slot(config: &EvolutionConfig, index: usize) -> (usize, InitMethod) {
    let levels = config.max_depth - config.init_min_depth + 1;
    let depth = config.init_min_depth + index % levels;
    let method = if (index / levels).is_multiple_of(2) {
        InitMethod::Full
    } else {
        InitMethod::Grow
    };
    (depth, method)
}

pub fn ramped_half_and_half<R: Rng + ?Sized>(config: &EvolutionConfig, rng: &mut R) -> Vec<ExprTree> {
    (0..config.population_size)
        .map(|i| match ramp_slot(config, i) {
            (depth, InitMethod::Full) => full_tree(rng, depth),
            (depth, InitMethod::Grow) => grow_tree(rng, config.init_min_depth.min(depth), depth),
        })
        .collect()
}

pub fn full_tree<R: Rng + ?Sized>(rng: &mut R, depth: usize) -> ExprTree {
    let mut genes = Vec::new();
    build(rng, &mut genes, 1, depth, depth);
    ExprTree::from_prefix(genes).expect("generated tree is well formed")
}

/// Grow-method tree whose depth lies in `min_depth..=max_depth`.
pub fn grow_tree<R: Rng + ?Sized>(rng: &mut R, min_depth: usize, max_depth: usize) -> ExprTree {
    let mut genes = Vec::new();
    build(rng, &mut genes, 1, min_depth, max_depth);
    ExprTree::from_prefix(genes).expect("generated tree is well formed")
}

/// Nodes shallower than `min_depth` are functions, nodes at `max_depth` are
/// terminals, and in between the choice is uniform over all 22 primitives.
fn build<R: Rng + ?Sized>(rng: &mut R, genes: &mut Vec<Gene>, level: usize, min_depth: usize, max_depth: usize) {
    let primitives = NUM_FEATURES + Op::ALL.len();
    let function = if level >= max_depth {
        false
    } else if level < min_depth {
        true
    } else {
        rng.gen_range(0..primitives) >= NUM_FEATURES
    };
    if function {
        genes.push(Gene::Func(Op::ALL[rng.gen_range(0..Op::ALL.len())]));
        build(rng, genes, level + 1, min_depth, max_depth);
        build(rng, genes, level + 1, min_depth, max_depth);
    } else {
        genes.push(Gene::Feature(rng.gen_range(0..NUM_FEATURES) as u8));
    }
}
