use std::collections::{HashMap, HashSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::evaluation::{evaluate_record, EvaluationRecord, Evaluator, ObjectiveVector, Status};
use crate::ledger::RunLedger;
use crate::metrics::{hypervolume_of, pareto_front, NormBounds, ParetoFront, DEFAULT_REFERENCE};
use crate::space::{ConfigId, ConfigSpace, Configuration};

use super::operators::{polynomial_mutation, rank_and_crowd, sbx_crossover, survivor_selection, tournament_select};
use super::{EvolutionError, GAParams, Individual};

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Worker threads per batch. Only honored by evaluators that declare
    /// themselves concurrency safe.
    pub parallel_evals: usize,
    /// Record evaluation wall time. Disable for byte-identical ledgers.
    pub timed: bool,
    /// Stop once this generation is finished (0 = initial population).
    pub stop_after_generation: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            parallel_evals: 1,
            timed: true,
            stop_after_generation: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizationResult {
    /// Every distinct configuration the run visited, in first-visit order.
    pub all_records: Vec<EvaluationRecord>,
    pub final_population: Vec<Individual>,
    /// Non-dominated successful records among `all_records`.
    pub pareto: ParetoFront,
    /// Hypervolume percent of the visited set after each generation; index 0
    /// is the initial population. All entries share one set of bounds.
    pub per_generation_hypervolume: Vec<f64>,
    pub hypervolume_bounds: Option<NormBounds>,
    /// Evaluations actually performed by this call (cache hits excluded).
    pub evaluations_run: usize,
    pub completed_generations: usize,
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResumeState {
    /// First generation that still needs evaluations; `None` if finished.
    pub next_generation: Option<usize>,
    pub cached_evaluations: usize,
}

fn generation_rng(seed: u64, generation: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(generation as u64);
    rng
}

fn check_ledger(ledger: &RunLedger, params: &GAParams, space: &ConfigSpace) -> Result<(), EvolutionError> {
    ledger.check_space(space)?;
    if let Some(recorded) = &ledger.header().ga_params {
        if recorded != params {
            return Err(EvolutionError::ParamMismatch(format!(
                "ledger was written with {recorded:?}, run requested {params:?}"
            )));
        }
    }
    Ok(())
}

/// How a batch of configurations gets objective values.
trait BatchSource {
    /// `Ok(None)` halts the run at `generation`.
    fn objectives(
        &mut self,
        generation: usize,
        configs: &[Configuration],
    ) -> Result<Option<Vec<ObjectiveVector>>, EvolutionError>;
}

struct Live<'a> {
    evaluator: &'a dyn Evaluator,
    instances: &'a [String],
    params: &'a GAParams,
    options: &'a RunOptions,
    ledger: &'a mut RunLedger,
    cache: HashMap<ConfigId, EvaluationRecord>,
    evaluations_run: usize,
}

impl Live<'_> {
    fn evaluate_pending(&mut self, generation: usize, pending: Vec<Configuration>) -> Result<(), EvolutionError> {
        let workers = if self.evaluator.concurrent_safe() {
            self.options.parallel_evals.clamp(1, pending.len().max(1))
        } else {
            1
        };
        let penalty = self.params.penalty_runtime;
        let timed = self.options.timed;
        if workers == 1 {
            for config in &pending {
                let record = evaluate_record(self.evaluator, config, self.instances, generation, penalty, timed);
                self.store(record)?;
            }
            return Ok(());
        }

        let next = AtomicUsize::new(0);
        let (tx, rx) = mpsc::channel::<(usize, EvaluationRecord)>();
        let evaluator = self.evaluator;
        let instances = self.instances;
        std::thread::scope(|scope| -> Result<(), EvolutionError> {
            for _ in 0..workers {
                let tx = tx.clone();
                let (next, pending) = (&next, &pending);
                scope.spawn(move || loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(config) = pending.get(i) else { break };
                    let record = evaluate_record(evaluator, config, instances, generation, penalty, timed);
                    if tx.send((i, record)).is_err() {
                        break;
                    }
                });
            }
            drop(tx);
            // append strictly in submission order so the ledger is
            // independent of scheduling
            let mut ready: Vec<Option<EvaluationRecord>> = vec![None; pending.len()];
            let mut flushed = 0;
            for (i, record) in rx {
                ready[i] = Some(record);
                while flushed < ready.len() {
                    let Some(record) = ready[flushed].take() else { break };
                    self.store(record)?;
                    flushed += 1;
                }
            }
            Ok(())
        })
    }

    fn store(&mut self, record: EvaluationRecord) -> Result<(), EvolutionError> {
        self.ledger.append(&record)?;
        self.evaluations_run += 1;
        self.cache.insert(record.configuration.id.clone(), record);
        Ok(())
    }
}

impl BatchSource for Live<'_> {
    fn objectives(
        &mut self,
        generation: usize,
        configs: &[Configuration],
    ) -> Result<Option<Vec<ObjectiveVector>>, EvolutionError> {
        let mut seen = HashSet::new();
        let pending: Vec<Configuration> = configs
            .iter()
            .filter(|c| !self.cache.contains_key(&c.id) && seen.insert(c.id.clone()))
            .cloned()
            .collect();
        if !pending.is_empty() {
            self.evaluate_pending(generation, pending)?;
        }
        Ok(Some(configs.iter().map(|c| self.cache[&c.id].objectives).collect()))
    }
}

/// Replays the run against the cache alone and halts at the first miss.
struct DryRun {
    cache: HashMap<ConfigId, ObjectiveVector>,
    halted_at: Option<usize>,
}

impl BatchSource for DryRun {
    fn objectives(
        &mut self,
        generation: usize,
        configs: &[Configuration],
    ) -> Result<Option<Vec<ObjectiveVector>>, EvolutionError> {
        let hits: Option<Vec<ObjectiveVector>> = configs.iter().map(|c| self.cache.get(&c.id).copied()).collect();
        if hits.is_none() {
            self.halted_at = Some(generation);
        }
        Ok(hits)
    }
}

struct Trajectory {
    population: Vec<Individual>,
    /// Ids in first-visit order, with the visited count after each generation.
    visited: Vec<ConfigId>,
    snapshots: Vec<usize>,
    completed_generations: usize,
    complete: bool,
}

fn individuals(space: &ConfigSpace, genomes: Vec<Vec<f64>>) -> Result<Vec<Individual>, EvolutionError> {
    genomes
        .into_iter()
        .map(|genome| {
            Ok(Individual {
                configuration: space.decode(&genome)?,
                genome,
                objectives: None,
                rank: 0,
                crowding: 0.0,
            })
        })
        .collect()
}

fn drive(
    space: &ConfigSpace,
    params: &GAParams,
    stop_after: Option<usize>,
    source: &mut dyn BatchSource,
) -> Result<Trajectory, EvolutionError> {
    let mut visited = Vec::new();
    let mut visited_set = HashSet::new();
    let mut snapshots = Vec::new();
    let mut visit = |batch: &[Individual], visited: &mut Vec<ConfigId>| {
        for ind in batch {
            if visited_set.insert(ind.configuration.id.clone()) {
                visited.push(ind.configuration.id.clone());
            }
        }
    };

    let mut rng = generation_rng(params.seed, 0);
    let genomes = (0..params.population_size).map(|_| space.random_genome(&mut rng)).collect();
    let mut population = individuals(space, genomes)?;
    let configs: Vec<Configuration> = population.iter().map(|i| i.configuration.clone()).collect();
    let Some(objectives) = source.objectives(0, &configs)? else {
        return Ok(Trajectory {
            population,
            visited,
            snapshots,
            completed_generations: 0,
            complete: false,
        });
    };
    for (ind, obj) in population.iter_mut().zip(objectives) {
        ind.objectives = Some(obj);
    }
    rank_and_crowd(&mut population);
    visit(&population, &mut visited);
    snapshots.push(visited.len());

    let mut completed = 0;
    for generation in 1..=params.generations {
        if stop_after.is_some_and(|s| completed >= s) {
            break;
        }
        let mut rng = generation_rng(params.seed, generation);
        let mut genomes: Vec<Vec<f64>> = Vec::with_capacity(params.population_size);
        while genomes.len() < params.population_size {
            let a = tournament_select(&population, &mut rng)?;
            let b = tournament_select(&population, &mut rng)?;
            let (c1, c2) = sbx_crossover(&population[a].genome, &population[b].genome, params, &mut rng)?;
            genomes.push(polynomial_mutation(c1, params, &mut rng));
            if genomes.len() < params.population_size {
                genomes.push(polynomial_mutation(c2, params, &mut rng));
            }
        }
        let mut offspring = individuals(space, genomes)?;
        let configs: Vec<Configuration> = offspring.iter().map(|i| i.configuration.clone()).collect();
        let Some(objectives) = source.objectives(generation, &configs)? else {
            return Ok(Trajectory {
                population,
                visited,
                snapshots,
                completed_generations: completed,
                complete: false,
            });
        };
        for (ind, obj) in offspring.iter_mut().zip(objectives) {
            ind.objectives = Some(obj);
        }
        visit(&offspring, &mut visited);
        snapshots.push(visited.len());
        population.extend(offspring);
        population = survivor_selection(population, params.population_size)?;
        completed = generation;
    }
    Ok(Trajectory {
        population,
        visited,
        snapshots,
        complete: completed == params.generations,
        completed_generations: completed,
    })
}

/// Runs NSGA-II, appending every new evaluation to `ledger`. Records
/// already in the ledger are reused, so rerunning against a partial ledger
/// with the same parameters continues where it stopped and reproduces the
/// uninterrupted run.
pub fn run_nsga2(
    space: &ConfigSpace,
    evaluator: &dyn Evaluator,
    instances: &[String],
    params: &GAParams,
    ledger: &mut RunLedger,
    options: &RunOptions,
) -> Result<OptimizationResult, EvolutionError> {
    params.validate()?;
    if instances.is_empty() {
        return Err(EvolutionError::NoInstances);
    }
    if params.mutation_probability > 0.0 && space.n_vars() == 0 {
        return Err(EvolutionError::InvalidParams("empty configuration space".into()));
    }
    check_ledger(ledger, params, space)?;
    let cache = ledger
        .records()
        .iter()
        .map(|r| (r.configuration.id.clone(), r.clone()))
        .collect();
    let mut live = Live {
        evaluator,
        instances,
        params,
        options,
        ledger,
        cache,
        evaluations_run: 0,
    };
    let trajectory = drive(space, params, options.stop_after_generation, &mut live)?;
    let all_records: Vec<EvaluationRecord> = trajectory.visited.iter().map(|id| live.cache[id].clone()).collect();

    let counted: Vec<usize> = (0..all_records.len())
        .filter(|&i| all_records[i].status == Status::Ok && !all_records[i].is_baseline())
        .collect();
    let vectors: Vec<ObjectiveVector> = counted.iter().map(|&i| all_records[i].objectives).collect();
    let bounds = NormBounds::induced(&vectors);
    let mut per_generation_hypervolume = Vec::with_capacity(trajectory.snapshots.len());
    for &len in &trajectory.snapshots {
        let upto: Vec<ObjectiveVector> = counted
            .iter()
            .filter(|&&i| i < len)
            .map(|&i| all_records[i].objectives)
            .collect();
        per_generation_hypervolume.push(match bounds {
            Some(b) if !upto.is_empty() => hypervolume_of(&upto, Some(b), DEFAULT_REFERENCE)?.percent,
            _ => 0.0,
        });
    }
    let counted_records: Vec<EvaluationRecord> = counted.iter().map(|&i| all_records[i].clone()).collect();
    let pareto = if counted_records.is_empty() {
        ParetoFront {
            members: Vec::new(),
            duplicates: Vec::new(),
            extracted_from: 0,
        }
    } else {
        pareto_front(&counted_records)?
    };

    Ok(OptimizationResult {
        all_records,
        final_population: trajectory.population,
        pareto,
        per_generation_hypervolume,
        hypervolume_bounds: bounds,
        evaluations_run: live.evaluations_run,
        completed_generations: trajectory.completed_generations,
        complete: trajectory.complete,
    })
}

/// Works out how far a ledger got without evaluating anything.
pub fn resume_state(ledger: &RunLedger, params: &GAParams, space: &ConfigSpace) -> Result<ResumeState, EvolutionError> {
    params.validate()?;
    check_ledger(ledger, params, space)?;
    let mut dry = DryRun {
        cache: ledger
            .records()
            .iter()
            .map(|r| (r.configuration.id.clone(), r.objectives))
            .collect(),
        halted_at: None,
    };
    drive(space, params, None, &mut dry)?;
    Ok(ResumeState {
        next_generation: dry.halted_at,
        cached_evaluations: ledger.records().len(),
    })
}
