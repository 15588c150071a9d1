use std::time::Instant;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::discrete::{batched, finish_phases, point_mutation};
use crate::error::{Error, Result};
use crate::gradcore::Embedding;
use crate::latentworld::{Codebook, ResidueSequence};
use crate::optimizer::{differing, CounterfactualResult, PhaseTimes};
use crate::predictor::TrainedPredictor;
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    /// Fitness penalty per mutation relative to the original.
    pub edit_penalty: f64,
    pub tau: f64,
    pub elite_fraction: f64,
    pub tournament_size: usize,
    pub min_mutations: usize,
    pub max_mutations: usize,
    /// Evaluation micro-batch; affects throughput only.
    pub batch_size: usize,
    pub target: i8,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population: 40,
            generations: 30,
            crossover_rate: 0.5,
            edit_penalty: 0.02,
            tau: 0.95,
            elite_fraction: 0.2,
            tournament_size: 3,
            min_mutations: 1,
            max_mutations: 2,
            batch_size: 8,
            target: 1,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::config("population must be at least 2"));
        }
        if !(0.0..1.0).contains(&self.elite_fraction) {
            return Err(Error::config("elite fraction must lie in [0, 1)"));
        }
        if self.tournament_size == 0 || self.tournament_size > self.population {
            return Err(Error::config("tournament size must lie in [1, population]"));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return Err(Error::config("crossover rate must lie in [0, 1]"));
        }
        if self.min_mutations == 0 || self.min_mutations > self.max_mutations {
            return Err(Error::config("mutation counts must satisfy 1 <= min <= max"));
        }
        if !(self.tau > 0.5 && self.tau <= 1.0) {
            return Err(Error::config("tau must lie in (0.5, 1]"));
        }
        if self.target != 1 && self.target != -1 {
            return Err(Error::config("target must be -1 or +1"));
        }
        Ok(())
    }

    fn elites(&self) -> usize {
        (self.elite_fraction * self.population as f64).round() as usize
    }
}

/// `conf(seq) - lambda * hamming(seq, seq_orig)`.
pub fn ga_fitness(
    seq: &ResidueSequence,
    seq_orig: &ResidueSequence,
    predictor: &TrainedPredictor,
    codebook: &Codebook,
    lambda: f64,
    target: i8,
) -> Result<f64> {
    if seq.len() != seq_orig.len() {
        return Err(Error::data(format!("length mismatch: {} vs {}", seq.len(), seq_orig.len())));
    }
    let conf = super::confidence(seq, codebook, predictor, target)?;
    Ok(conf - lambda * differing(seq, seq_orig) as f64)
}

struct Individual {
    seq: ResidueSequence,
    conf: f64,
    fitness: f64,
    z: Embedding,
}

fn mutate(seq: &mut ResidueSequence, cfg: &GaConfig, alphabet: usize, rng: &mut Rng) {
    let n = rng.random_range(cfg.min_mutations..=cfg.max_mutations);
    for _ in 0..n {
        point_mutation(seq, alphabet, rng);
    }
}

fn tournament<'a>(pop: &'a [Individual], size: usize, rng: &mut Rng) -> &'a Individual {
    let mut best = &pop[rng.random_range(0..pop.len())];
    for _ in 1..size {
        let c = &pop[rng.random_range(0..pop.len())];
        if c.fitness > best.fitness {
            best = c;
        }
    }
    best
}

pub fn genetic_algorithm(
    seq_orig: &ResidueSequence,
    codebook: &Codebook,
    predictor: &TrainedPredictor,
    cfg: &GaConfig,
    rng: &mut Rng,
) -> Result<CounterfactualResult> {
    genetic_algorithm_traced(seq_orig, codebook, predictor, cfg, rng).map(|(r, _)| r)
}

/// Also returns the best fitness of every evaluated generation.
pub fn genetic_algorithm_traced(
    seq_orig: &ResidueSequence,
    codebook: &Codebook,
    predictor: &TrainedPredictor,
    cfg: &GaConfig,
    rng: &mut Rng,
) -> Result<(CounterfactualResult, Vec<f64>)> {
    cfg.validate()?;
    let start = Instant::now();
    let mut phases = PhaseTimes::default();
    let alphabet = codebook.alphabet_size();
    let evaluate = |seqs: Vec<ResidueSequence>, phases: &mut PhaseTimes| -> Result<Vec<Individual>> {
        let scored = batched(&seqs, codebook, predictor, cfg.target, cfg.batch_size, phases)?;
        Ok(seqs
            .into_iter()
            .zip(scored)
            .map(|(seq, (conf, z))| {
                let fitness = conf - cfg.edit_penalty * differing(&seq, seq_orig) as f64;
                Individual { seq, conf, fitness, z }
            })
            .collect())
    };
    // Best fitness first; stable, so earlier individuals win ties.
    let rank = |pop: &mut Vec<Individual>| pop.sort_by(|a, b| b.fitness.total_cmp(&a.fitness));

    let initial: Vec<ResidueSequence> = (0..cfg.population)
        .map(|_| {
            let mut s = seq_orig.clone();
            mutate(&mut s, cfg, alphabet, rng);
            s
        })
        .collect();
    let mut pop = evaluate(initial, &mut phases)?;
    rank(&mut pop);
    let mut trace = vec![pop[0].conf];
    let mut history = vec![pop[0].fitness];
    let n_elite = cfg.elites();
    for _ in 0..cfg.generations {
        if pop[0].conf >= cfg.tau {
            break;
        }
        let t0 = Instant::now();
        let mut next: Vec<ResidueSequence> = pop[..n_elite].iter().map(|i| i.seq.clone()).collect();
        let mut offspring = Vec::with_capacity(cfg.population - n_elite);
        while offspring.len() < cfg.population - n_elite {
            let a = tournament(&pop, cfg.tournament_size, rng);
            let b = tournament(&pop, cfg.tournament_size, rng);
            let len = seq_orig.len();
            let mut child = a.seq.clone();
            if len > 1 && rng.random_bool(cfg.crossover_rate) {
                let cut = rng.random_range(1..len);
                for i in cut..len {
                    child.set(i, b.seq.get(i));
                }
            }
            mutate(&mut child, cfg, alphabet, rng);
            offspring.push(child);
        }
        phases.other += t0.elapsed();
        let mut children = evaluate(offspring, &mut phases)?;
        let mut elites: Vec<Individual> = pop.drain(..n_elite).collect();
        next.clear();
        elites.append(&mut children);
        pop = elites;
        rank(&mut pop);
        trace.push(pop[0].conf);
        history.push(pop[0].fitness);
    }
    let best = pop.swap_remove(0);
    let edit_distance = differing(&best.seq, seq_orig);
    let (duration, phases) = finish_phases(start, phases);
    let result = CounterfactualResult {
        success: best.conf >= cfg.tau && edit_distance > 0,
        adversarial: false,
        steps_used: trace.len() - 1,
        trace,
        final_confidence: best.conf,
        edit_distance,
        embedding: best.z,
        sequence: best.seq,
        original: seq_orig.clone(),
        duration,
        phases,
        mask_union: vec![false; seq_orig.len()],
        leakage: edit_distance,
    };
    Ok((result, history))
}
