//! Tree-based genetic programming over urgency functions.
//!
//! Generational loop: ramped half-and-half initialisation, tournament
//! selection, and mutually exclusive subtree crossover or subtree mutation per
//! offspring. There is no elitism, so the overall best is tracked separately
//! from the per-generation statistics. Fitness is minimised.

mod init;
mod ops;
mod simplify;
mod tree;

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::features::NUM_FEATURES;

pub use init::{full_tree, grow_tree, ramp_slot, ramped_half_and_half, InitMethod};
pub use ops::{
    subtree_crossover, subtree_mutation, tournament_index, tournament_select, tournament_winner, MUTATION_DEPTH,
};
pub use simplify::simplify;
pub use tree::{ExprTree, Gene, Op, TreeError, DEPTH_LIMIT, SATURATION};

#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionConfig {
    pub population_size: usize,
    /// Generations bred after the initial population.
    pub generations: usize,
    pub init_min_depth: usize,
    pub max_depth: usize,
    pub tournament_size: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub seed: u64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            population_size: 100,
            generations: 50,
            init_min_depth: 3,
            max_depth: 8,
            tournament_size: 3,
            crossover_rate: 0.9,
            mutation_rate: 0.1,
            seed: 0,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<(), &'static str> {
        if self.population_size == 0 || self.tournament_size == 0 {
            return Err("population and tournament sizes must be positive");
        }
        if self.init_min_depth == 0 || self.init_min_depth > self.max_depth {
            return Err("need 1 <= init_min_depth <= max_depth");
        }
        if self.max_depth > DEPTH_LIMIT {
            return Err("max_depth exceeds the tree depth limit");
        }
        let rates_ok = (0.0..=1.0).contains(&self.crossover_rate)
            && (0.0..=1.0).contains(&self.mutation_rate)
            && libm::fabs(self.crossover_rate + self.mutation_rate - 1.0) < 1e-9;
        if !rates_ok {
            return Err("crossover and mutation rates must be in [0, 1] and sum to 1");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenerationStats {
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub best_tree: ExprTree,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionTrace {
    pub generations: Vec<GenerationStats>,
    /// Best tree seen in any generation.
    pub best: ExprTree,
    pub best_fitness: f64,
    pub best_generation: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvolveError<E> {
    #[error("invalid evolution config: {0}")]
    Config(&'static str),
    #[error("fitness of individual {index} in generation {generation} failed")]
    Fitness { generation: usize, index: usize, error: E },
    #[error("fitness of individual {index} in generation {generation} is not finite")]
    NonFinite { generation: usize, index: usize },
}

fn stats(generation: usize, population: &[ExprTree], fitness: &[f64]) -> GenerationStats {
    let n = fitness.len() as f64;
    let mean = fitness.iter().sum::<f64>() / n;
    let var = fitness.iter().map(|f| (f - mean) * (f - mean)).sum::<f64>() / n;
    let best = tournament_winner(fitness, &(0..fitness.len()).collect::<Vec<_>>());
    GenerationStats {
        generation,
        best: fitness[best],
        mean,
        std: libm::sqrt(var),
        best_tree: population[best].clone(),
    }
}

/// Runs the evolutionary loop.
///
/// `fitness` scores a whole generation and must return one result per tree in
/// input order; it may evaluate them in any order or in parallel. The first
/// failure (by individual index) aborts the run. `observe` sees every evaluated
/// generation. All randomness comes from `config.seed`.
pub fn evolve_with<E, F, O>(
    config: &EvolutionConfig,
    mut fitness: F,
    mut observe: O,
) -> Result<EvolutionTrace, EvolveError<E>>
where
    F: FnMut(&[ExprTree]) -> Vec<Result<f64, E>>,
    O: FnMut(usize, &[ExprTree], &[f64]),
{
    config.validate().map_err(EvolveError::Config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut population = ramped_half_and_half(config, &mut rng);
    let mut trace = Vec::with_capacity(config.generations + 1);
    let mut overall: Option<(ExprTree, f64, usize)> = None;

    for generation in 0..=config.generations {
        if generation > 0 {
            population = breed(config, &population, &trace_fitness(&trace), &mut rng);
        }
        let results = fitness(&population);
        assert_eq!(results.len(), population.len(), "fitness must score every individual");
        let mut scores = Vec::with_capacity(results.len());
        for (index, r) in results.into_iter().enumerate() {
            match r {
                Ok(f) if f.is_finite() => scores.push(f),
                Ok(_) => return Err(EvolveError::NonFinite { generation, index }),
                Err(error) => {
                    return Err(EvolveError::Fitness {
                        generation,
                        index,
                        error,
                    })
                }
            }
        }
        observe(generation, &population, &scores);
        let s = stats(generation, &population, &scores);
        if overall.as_ref().is_none_or(|(_, f, _)| s.best < *f) {
            overall = Some((s.best_tree.clone(), s.best, generation));
        }
        trace.push((s, scores));
    }

    let (best, best_fitness, best_generation) = overall.expect("at least one generation");
    Ok(EvolutionTrace {
        generations: trace.into_iter().map(|(s, _)| s).collect(),
        best,
        best_fitness,
        best_generation,
    })
}

fn trace_fitness(trace: &[(GenerationStats, Vec<f64>)]) -> Vec<f64> {
    trace.last().map(|(_, f)| f.clone()).unwrap_or_default()
}

fn breed<R: Rng + ?Sized>(
    config: &EvolutionConfig,
    population: &[ExprTree],
    fitness: &[f64],
    rng: &mut R,
) -> Vec<ExprTree> {
    (0..config.population_size)
        .map(|_| {
            if rng.gen::<f64>() < config.crossover_rate {
                let p1 = tournament_select(population, fitness, config.tournament_size, rng);
                let p2 = tournament_select(population, fitness, config.tournament_size, rng);
                subtree_crossover(p1, p2, config.max_depth, rng)
            } else {
                let p = tournament_select(population, fitness, config.tournament_size, rng);
                subtree_mutation(p, config.max_depth, rng)
            }
        })
        .collect()
}

/// [`evolve_with`] with a per-tree fitness evaluated serially.
pub fn evolve<E>(
    config: &EvolutionConfig,
    mut fitness: impl FnMut(&ExprTree) -> Result<f64, E>,
) -> Result<EvolutionTrace, EvolveError<E>> {
    evolve_with(config, |pop| pop.iter().map(&mut fitness).collect(), |_, _, _| {})
}

/// Mean occurrences of each terminal per tree; all zero for an empty list.
pub fn terminal_frequencies(trees: &[ExprTree]) -> [f64; NUM_FEATURES] {
    let mut freq = [0.0; NUM_FEATURES];
    if trees.is_empty() {
        return freq;
    }
    for t in trees {
        for (f, c) in freq.iter_mut().zip(t.terminal_counts()) {
            *f += c as f64;
        }
    }
    for f in &mut freq {
        *f /= trees.len() as f64;
    }
    freq
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::convert::Infallible;

    fn small(seed: u64) -> EvolutionConfig {
        EvolutionConfig {
            population_size: 20,
            generations: 5,
            seed,
            ..EvolutionConfig::default()
        }
    }

    #[test]
    fn zero_generations_returns_initial_best() {
        let config = EvolutionConfig {
            generations: 0,
            ..small(1)
        };
        let trace = evolve(&config, |t| Ok::<_, Infallible>(t.len() as f64)).unwrap();
        assert_eq!(trace.generations.len(), 1);
        let initial = ramped_half_and_half(&config, &mut ChaCha8Rng::seed_from_u64(1));
        let min_len = initial.iter().map(ExprTree::len).min().unwrap();
        assert_eq!(trace.best_fitness, min_len as f64);
        assert_eq!(trace.best, *initial.iter().find(|t| t.len() == min_len).unwrap());
    }

    #[test]
    fn constant_fitness() {
        let config = small(4);
        let trace = evolve(&config, |_| Ok::<_, Infallible>(7.0)).unwrap();
        let initial = ramped_half_and_half(&config, &mut ChaCha8Rng::seed_from_u64(4));
        assert_eq!(trace.best, initial[0]);
        assert_eq!(trace.best_generation, 0);
        for g in &trace.generations {
            assert_eq!((g.mean, g.std, g.best), (7.0, 0.0, 7.0));
        }
    }

    #[test]
    fn overall_best_never_worse_than_any_generation() {
        let target = [
            3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0, 5.0, 3.0, 5.0, 8.0, 9.0, 7.0, 9.0, 3.0,
        ];
        let trace = evolve(&small(8), |t| {
            Ok::<_, Infallible>(libm::fabs(t.eval_slice(&target) - 42.0))
        })
        .unwrap();
        for g in &trace.generations {
            assert!(trace.best_fitness <= g.best);
        }
        assert_eq!(trace.best_fitness, trace.generations[trace.best_generation].best);
    }

    #[test]
    fn errors_abort_at_first_index() {
        let err = evolve_with(
            &small(0),
            |pop| {
                pop.iter()
                    .enumerate()
                    .map(|(i, _)| if i >= 3 { Err(i) } else { Ok(1.0) })
                    .collect()
            },
            |_, _, _| {},
        )
        .unwrap_err();
        assert_eq!(
            err,
            EvolveError::Fitness {
                generation: 0,
                index: 3,
                error: 3
            }
        );
        let err = evolve(&small(0), |_| Ok::<_, Infallible>(f64::NAN)).unwrap_err();
        assert_eq!(
            err,
            EvolveError::NonFinite {
                generation: 0,
                index: 0
            }
        );
    }

    #[test]
    fn config_validation() {
        let bad = EvolutionConfig {
            crossover_rate: 0.8,
            ..EvolutionConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = EvolutionConfig {
            init_min_depth: 9,
            ..EvolutionConfig::default()
        };
        assert!(bad.validate().is_err());
        assert!(EvolutionConfig::default().validate().is_ok());
    }

    #[test]
    fn terminal_frequency_means() {
        let t1: ExprTree = "(+ x0 x1)".parse().unwrap();
        let f = terminal_frequencies(core::slice::from_ref(&t1));
        assert_eq!((f[0], f[1]), (1.0, 1.0));
        assert_eq!(f.iter().sum::<f64>(), 2.0);
        let f = terminal_frequencies(&[t1, ExprTree::feature(0)]);
        assert_eq!((f[0], f[1]), (1.0, 0.5));
        assert_eq!(terminal_frequencies(&[]), [0.0; 16]);
    }
}
