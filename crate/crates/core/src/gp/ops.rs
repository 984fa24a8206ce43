use rand::Rng;

use super::init::grow_tree;
use super::tree::ExprTree;

/// Maximum depth of the subtree grown by mutation.
pub const MUTATION_DEPTH: usize = 4;

/// Index of the fittest (lowest) entry among `draws`; ties go to the lowest
/// population index.
pub fn tournament_winner(fitness: &[f64], draws: &[usize]) -> usize {
    let mut best = draws[0];
    for &d in &draws[1..] {
        if fitness[d] < fitness[best] || (fitness[d] == fitness[best] && d < best) {
            best = d;
        }
    }
    best
}

/// Draws `k` indices uniformly with replacement and returns the winner's index.
///
/// # Panics
/// If the population is empty or `k` is zero.
pub fn tournament_index<R: Rng + ?Sized>(fitness: &[f64], k: usize, rng: &mut R) -> usize {
    assert!(!fitness.is_empty() && k > 0, "tournament needs entrants");
    let mut draws = [0usize; 16];
    let mut winner = None;
    // draw in chunks so arbitrary k works without allocating
    let mut left = k;
    while left > 0 {
        let n = left.min(draws.len());
        for d in draws.iter_mut().take(n) {
            *d = rng.gen_range(0..fitness.len());
        }
        let w = tournament_winner(fitness, &draws[..n]);
        winner = Some(match winner {
            Some(prev) => tournament_winner(fitness, &[prev, w]),
            None => w,
        });
        left -= n;
    }
    winner.unwrap()
}

pub fn tournament_select<'p, R: Rng + ?Sized>(
    population: &'p [ExprTree],
    fitness: &[f64],
    k: usize,
    rng: &mut R,
) -> &'p ExprTree {
    assert_eq!(
        population.len(),
        fitness.len(),
        "fitness must align with the population"
    );
    &population[tournament_index(fitness, k, rng)]
}

/// Replaces a uniformly chosen node of `p1` by a uniformly chosen subtree of
/// `p2`. Offspring deeper than `max_depth` are discarded in favour of a copy of `p1`.
pub fn subtree_crossover<R: Rng + ?Sized>(p1: &ExprTree, p2: &ExprTree, max_depth: usize, rng: &mut R) -> ExprTree {
    let at = rng.gen_range(0..p1.len());
    let from = rng.gen_range(0..p2.len());
    let child = p1.replace_subtree(at, &p2.subtree(from));
    if child.depth() > max_depth {
        p1.clone()
    } else {
        child
    }
}

/// Replaces a uniformly chosen node of `p` by a fresh grow-method subtree of
/// depth at most [`MUTATION_DEPTH`], with the same depth guard as crossover.
pub fn subtree_mutation<R: Rng + ?Sized>(p: &ExprTree, max_depth: usize, rng: &mut R) -> ExprTree {
    let at = rng.gen_range(0..p.len());
    let fresh = grow_tree(rng, 1, MUTATION_DEPTH);
    let child = p.replace_subtree(at, &fresh);
    if child.depth() > max_depth {
        p.clone()
    } else {
        child
    }
}
