//! Seeded real-coded genetic algorithm over a box.
//!
//! Candidate evaluation runs in parallel, but every random draw happens on
//! one thread in a fixed order, so results depend only on the seed.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GaConfig {
    pub population: usize,
    pub tournament: usize,
    /// Mutation standard deviation as a fraction of each bound width.
    pub mutation_sigma: f64,
    /// Per-gene probability of mutation.
    pub mutation_rate: f64,
    /// Per-gene probability of taking the second parent's value.
    pub crossover: f64,
    pub elitism: usize,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 64,
            tournament: 3,
            mutation_sigma: 0.05,
            mutation_rate: 1.0,
            crossover: 0.5,
            elitism: 2,
        }
    }
}

impl GaConfig {
    fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::invalid("GA population must be at least 2"));
        }
        if self.tournament == 0 {
            return Err(Error::invalid("GA tournament size must be at least 1"));
        }
        if self.elitism > self.population {
            return Err(Error::invalid("GA elitism exceeds population"));
        }
        for (name, p) in [
            ("mutation_rate", self.mutation_rate),
            ("crossover", self.crossover),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("GA {name} must be in [0, 1]")));
            }
        }
        if !(self.mutation_sigma >= 0.0) || !self.mutation_sigma.is_finite() {
            return Err(Error::invalid("GA mutation_sigma must be finite and >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaResult {
    pub params: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

#[derive(Clone)]
struct Scored {
    genes: Vec<f64>,
    value: f64,
    index: usize,
}

/// Lower objective first; ties go to the smaller parameter sum, then the earlier candidate.
fn rank(a: &Scored, b: &Scored) -> Ordering {
    let sa: f64 = a.genes.iter().sum();
    let sb: f64 = b.genes.iter().sum();
    a.value
        .total_cmp(&b.value)
        .then(sa.total_cmp(&sb))
        .then(a.index.cmp(&b.index))
}

/// Minimizes `f` over `bounds` for `generations` generations.
///
/// Non-finite objective values are treated as `+inf`.
pub fn minimize<F>(
    f: F,
    bounds: &[(f64, f64)],
    generations: usize,
    seed: u64,
    cfg: &GaConfig,
) -> Result<GaResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    if generations == 0 {
        return Err(Error::invalid("GA budget must be at least one generation"));
    }
    if bounds.is_empty() {
        return Err(Error::invalid("GA needs at least one parameter"));
    }
    for (i, &(lo, hi)) in bounds.iter().enumerate() {
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(Error::invalid(format!(
                "invalid bounds for parameter {i}: [{lo}, {hi}]"
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigmas: Vec<f64> = bounds
        .iter()
        .map(|(lo, hi)| cfg.mutation_sigma * (hi - lo))
        .collect();
    let mut genomes: Vec<Vec<f64>> = (0..cfg.population)
        .map(|_| {
            bounds
                .iter()
                .map(|&(lo, hi)| {
                    if hi > lo {
                        rng.random_range(lo..=hi)
                    } else {
                        lo
                    }
                })
                .collect()
        })
        .collect();

    let mut best: Option<Scored> = None;
    let mut evaluations = 0usize;
    let mut next_index = 0usize;

    for generation in 0..generations {
        let values: Vec<f64> = genomes
            .par_iter()
            .map(|g| {
                let v = f(g);
                if v.is_nan() {
                    f64::INFINITY
                } else {
                    v
                }
            })
            .collect();
        evaluations += genomes.len();
        let mut scored: Vec<Scored> = genomes
            .drain(..)
            .zip(values)
            .map(|(genes, value)| {
                let s = Scored {
                    genes,
                    value,
                    index: next_index,
                };
                next_index += 1;
                s
            })
            .collect();
        scored.sort_by(rank);
        if best
            .as_ref()
            .is_none_or(|b| rank(&scored[0], b) == Ordering::Less)
        {
            best = Some(scored[0].clone());
        }
        if generation + 1 == generations {
            break;
        }

        genomes = scored
            .iter()
            .take(cfg.elitism)
            .map(|s| s.genes.clone())
            .collect();
        while genomes.len() < cfg.population {
            let p1 = tournament(&scored, cfg.tournament, &mut rng);
            let p2 = tournament(&scored, cfg.tournament, &mut rng);
            let mut child: Vec<f64> = p1
                .genes
                .iter()
                .zip(&p2.genes)
                .map(|(&a, &b)| if rng.random_bool(cfg.crossover) { b } else { a })
                .collect();
            for (i, gene) in child.iter_mut().enumerate() {
                if sigmas[i] > 0.0 && rng.random_bool(cfg.mutation_rate) {
                    let step = Normal::new(0.0, sigmas[i])
                        .expect("positive sigma")
                        .sample(&mut rng);
                    *gene = (*gene + step).clamp(bounds[i].0, bounds[i].1);
                }
            }
            genomes.push(child);
        }
    }

    let best = best.expect("at least one generation evaluated");
    if !best.value.is_finite() {
        return Err(Error::Numerical(format!(
            "all {evaluations} candidates evaluated to a non-finite objective (singular constraint sets)"
        )));
    }
    Ok(GaResult {
        params: best.genes,
        value: best.value,
        evaluations,
    })
}

fn tournament<'a>(pop: &'a [Scored], size: usize, rng: &mut ChaCha8Rng) -> &'a Scored {
    // `pop` is sorted best-first, so the smallest drawn position wins.
    let pick = (0..size)
        .map(|_| rng.random_range(0..pop.len()))
        .min()
        .expect("size >= 1");
    &pop[pick]
}
