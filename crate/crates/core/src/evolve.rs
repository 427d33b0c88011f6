//! NSGA-II search over flip budgets, maximizing weighted accuracy while
//! minimizing the average encoder similarity.
//!
//! Randomness for population initialization and for each generation's
//! variation is drawn serially from its own substream before candidates
//! are evaluated in parallel; results are consumed by position, never by
//! completion order, so the worker count cannot change the outcome.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use log::{debug, info};
use rand::Rng;
use rayon::prelude::*;

use crate::data::{write_atomic, Dataset, Quantizer};
use crate::error::{HdcError, Result};
use crate::hv::{uniform_flip_budget, FlipBudget};
use crate::objectives::{ObjectiveScores, TrainingProblem};
use crate::rng::{substream, Domain};

#[derive(Debug, Clone, PartialEq)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    /// Per-gene reset probability; `None` means `1 / (N (M - 1))`.
    pub mutation_rate: Option<f64>,
    pub tournament_size: usize,
    pub seed: u64,
    pub dim: usize,
    pub levels: usize,
    /// Evaluation threads; 0 uses the rayon default.
    pub workers: usize,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 200,
            generations: 150,
            crossover_rate: 0.9,
            mutation_rate: None,
            tournament_size: 2,
            seed: 0,
            dim: 64,
            levels: 20,
            workers: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 4 || !self.population.is_multiple_of(2) {
            return Err(HdcError::InvalidArgument(format!(
                "population must be even and at least 4, got {}",
                self.population
            )));
        }
        if self.generations == 0 {
            return Err(HdcError::InvalidArgument("need at least one generation".into()));
        }
        for (name, rate) in [
            ("crossover", self.crossover_rate),
            ("mutation", self.mutation_rate.unwrap_or(0.0)),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(HdcError::InvalidArgument(format!(
                    "{name} rate {rate} outside [0, 1]"
                )));
            }
        }
        if self.tournament_size == 0 {
            return Err(HdcError::InvalidArgument("tournament size must be at least 1".into()));
        }
        if self.dim == 0 || !self.dim.is_multiple_of(2) {
            return Err(HdcError::InvalidDimension(format!(
                "D must be a positive even number, got {}",
                self.dim
            )));
        }
        if self.levels < 2 {
            return Err(HdcError::InvalidLevels(format!(
                "need at least 2 levels, got {}",
                self.levels
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub id: u64,
    pub budget: FlipBudget,
    pub scores: Option<ObjectiveScores>,
}

/// Scales every row whose sum exceeds `D / 2` by `(D / 2) / sum` and floors.
pub fn repair(budget: &FlipBudget) -> FlipBudget {
    let mut out = budget.clone();
    let cap = budget.row_capacity();
    for n in 0..out.features() {
        let row = out.row_mut(n);
        let sum: u64 = row.iter().map(|&b| b as u64).sum();
        if sum > cap {
            for b in row.iter_mut() {
                *b = (*b as u64 * cap / sum) as u32;
            }
        }
    }
    out
}

/// Random row rescaled to a random total in `[0, cap]`. Largest-remainder
/// rounding makes the row sum equal that total exactly, so rows at the
/// capacity boundary are drawn as often as any other total.
fn random_row<R: Rng + ?Sized>(rng: &mut R, row: &mut [u32], cap: u32) {
    for b in row.iter_mut() {
        *b = rng.random_range(0..=cap);
    }
    let sum: u64 = row.iter().map(|&b| b as u64).sum();
    let target = rng.random_range(0..=cap) as u64;
    if sum == 0 {
        return;
    }
    let mut remainders: Vec<(u64, usize)> = Vec::with_capacity(row.len());
    let mut assigned = 0u64;
    for (i, b) in row.iter_mut().enumerate() {
        let scaled = *b as u64 * target;
        *b = (scaled / sum) as u32;
        assigned += *b as u64;
        remainders.push((scaled % sum, i));
    }
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in remainders.iter().take((target - assigned) as usize) {
        row[i] += 1;
    }
}

/// `P` random feasible budgets; the first is the uniform baseline.
pub fn initialize_population(config: &GaConfig, features: usize) -> Result<Vec<Individual>> {
    config.validate()?;
    let mut rng = substream(config.seed, Domain::Population, 0);
    let cap = (config.dim / 2) as u32;
    let mut population = Vec::with_capacity(config.population);
    population.push(Individual {
        id: 0,
        budget: uniform_flip_budget(config.dim, features, config.levels)?,
        scores: None,
    });
    for id in 1..config.population as u64 {
        let mut budget = FlipBudget::zeros(config.dim, features, config.levels)?;
        for n in 0..features {
            random_row(&mut rng, budget.row_mut(n), cap);
        }
        debug_assert!(budget.is_feasible());
        population.push(Individual {
            id,
            budget,
            scores: None,
        });
    }
    Ok(population)
}

/// Feasible beats infeasible; otherwise Pareto dominance on
/// (maximize `wacc`, minimize `avg_sim`).
pub fn dominates(a: &ObjectiveScores, b: &ObjectiveScores) -> bool {
    match (a.feasible, b.feasible) {
        (true, false) => true,
        (false, true) => false,
        _ => {
            a.wacc >= b.wacc
                && a.avg_sim <= b.avg_sim
                && (a.wacc > b.wacc || a.avg_sim < b.avg_sim)
        }
    }
}

/// Fast non-dominated sorting and per-front crowding distance.
pub fn rank_population(scored: &[ObjectiveScores]) -> (Vec<usize>, Vec<f64>) {
    let n = scored.len();
    let mut dominated_by = vec![0usize; n];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if dominates(&scored[i], &scored[j]) {
                dominates_list[i].push(j);
                dominated_by[j] += 1;
            } else if dominates(&scored[j], &scored[i]) {
                dominates_list[j].push(i);
                dominated_by[i] += 1;
            }
        }
    }

    let mut ranks = vec![0usize; n];
    let mut crowding = vec![0.0f64; n];
    let mut front: Vec<usize> = (0..n).filter(|&i| dominated_by[i] == 0).collect();
    let mut rank = 0;
    while !front.is_empty() {
        for &i in &front {
            ranks[i] = rank;
        }
        assign_crowding(scored, &front, &mut crowding);
        let mut next = Vec::new();
        for &i in &front {
            for &j in &dominates_list[i] {
                dominated_by[j] -= 1;
                if dominated_by[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        front = next;
        rank += 1;
    }
    (ranks, crowding)
}

fn assign_crowding(scored: &[ObjectiveScores], front: &[usize], crowding: &mut [f64]) {
    for &i in front {
        crowding[i] = 0.0;
    }
    if front.len() <= 2 {
        for &i in front {
            crowding[i] = f64::INFINITY;
        }
        return;
    }
    let objectives: [fn(&ObjectiveScores) -> f64; 2] = [|s| s.wacc, |s| s.avg_sim];
    for objective in objectives {
        let mut order = front.to_vec();
        order.sort_by(|&a, &b| {
            objective(&scored[a])
                .total_cmp(&objective(&scored[b]))
                .then(a.cmp(&b))
        });
        let lo = objective(&scored[order[0]]);
        let hi = objective(&scored[*order.last().unwrap()]);
        crowding[order[0]] = f64::INFINITY;
        crowding[*order.last().unwrap()] = f64::INFINITY;
        let span = hi - lo;
        if span <= 0.0 {
            continue;
        }
        for w in order.windows(3) {
            let gap = objective(&scored[w[2]]) - objective(&scored[w[0]]);
            crowding[w[1]] += gap / span;
        }
    }
}

/// Lower rank first, then larger crowding, then lower position.
fn crowded_cmp(ranks: &[usize], crowding: &[f64], a: usize, b: usize) -> Ordering {
    ranks[a]
        .cmp(&ranks[b])
        .then(crowding[b].total_cmp(&crowding[a]))
        .then(a.cmp(&b))
}

fn scores_of(population: &[Individual]) -> Result<Vec<ObjectiveScores>> {
    population
        .iter()
        .map(|i| {
            i.scores
                .ok_or_else(|| HdcError::InvalidArgument(format!("individual {} is unscored", i.id)))
        })
        .collect()
}

/// Scores every unscored individual in parallel, writing results in place.
pub fn evaluate_population(problem: &TrainingProblem, population: &mut [Individual]) -> Result<()> {
    population
        .par_iter_mut()
        .filter(|ind| ind.scores.is_none())
        .try_for_each(|ind| {
            ind.scores = Some(problem.evaluate(&ind.budget)?);
            Ok(())
        })
}

fn tournament<R: Rng + ?Sized>(
    rng: &mut R,
    size: usize,
    ranks: &[usize],
    crowding: &[f64],
) -> usize {
    let n = ranks.len();
    let mut best = rng.random_range(0..n);
    for _ in 1..size {
        let c = rng.random_range(0..n);
        if crowded_cmp(ranks, crowding, c, best) == Ordering::Less {
            best = c;
        }
    }
    best
}

/// Attempts at re-mutating a child whose budget is already in the
/// population or among this generation's earlier children.
const DUPLICATE_RETRIES: usize = 8;
/// Per-gene rate used for those re-mutations when the configured rate is lower.
const MIN_RETRY_RATE: f64 = 0.25;

fn mutated<R: Rng + ?Sized>(rng: &mut R, budget: &FlipBudget, rate: f64) -> FlipBudget {
    let mut out = budget.clone();
    let cap = out.row_capacity() as u32;
    for gene in out.flat_mut() {
        if rng.random::<f64>() < rate {
            *gene = rng.random_range(0..=cap);
        }
    }
    out
}

/// One NSGA-II generation: tournament selection, uniform crossover,
/// uniform-reset mutation, repair, evaluation, and elitist `(mu + lambda)`
/// truncation back to `P` individuals.
pub fn evolve_generation(
    population: Vec<Individual>,
    problem: &TrainingProblem,
    config: &GaConfig,
    generation: u64,
    next_id: &mut u64,
) -> Result<Vec<Individual>> {
    let p = config.population;
    let scores = scores_of(&population)?;
    let (ranks, crowding) = rank_population(&scores);
    let mut rng = substream(config.seed, Domain::Variation, generation);
    let genes = problem.features() * (config.levels - 1);
    let mutation_rate = config.mutation_rate.unwrap_or(1.0 / genes as f64);

    let mut known: BTreeSet<FlipBudget> = population.iter().map(|i| i.budget.clone()).collect();
    let mut children = Vec::with_capacity(p);
    while children.len() < p {
        let a = tournament(&mut rng, config.tournament_size, &ranks, &crowding);
        let b = tournament(&mut rng, config.tournament_size, &ranks, &crowding);
        let mut c1 = population[a].budget.clone();
        let mut c2 = population[b].budget.clone();
        if rng.random::<f64>() < config.crossover_rate {
            for (g1, g2) in c1.flat_mut().iter_mut().zip(c2.flat_mut().iter_mut()) {
                if rng.random::<bool>() {
                    std::mem::swap(g1, g2);
                }
            }
        }
        for child in [c1, c2] {
            let mut budget = repair(&mutated(&mut rng, &child, mutation_rate));
            for _ in 0..DUPLICATE_RETRIES {
                if !known.contains(&budget) {
                    break;
                }
                budget = repair(&mutated(&mut rng, &child, mutation_rate.max(MIN_RETRY_RATE)));
            }
            known.insert(budget.clone());
            children.push(Individual {
                id: *next_id,
                budget,
                scores: None,
            });
            *next_id += 1;
        }
    }
    children.truncate(p);
    evaluate_population(problem, &mut children)?;

    let mut combined = population;
    combined.extend(children);
    let scores = scores_of(&combined)?;
    let (ranks, crowding) = rank_population(&scores);
    let mut order: Vec<usize> = (0..combined.len()).collect();
    order.sort_by(|&a, &b| crowded_cmp(&ranks, &crowding, a, b));
    order.truncate(p);
    order.sort_unstable();

    let mut keep = vec![false; combined.len()];
    for i in order {
        keep[i] = true;
    }
    Ok(combined
        .into_iter()
        .zip(keep)
        .filter_map(|(ind, k)| k.then_some(ind))
        .collect())
}

/// Area dominated by `points` in the (wAcc, 1 - avgSim) plane, measured
/// from the reference point wAcc = 0, avgSim = 1.
pub fn hypervolume(points: &[ObjectiveScores]) -> f64 {
    let mut pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|s| s.feasible)
        .map(|s| (s.wacc.max(0.0), (1.0 - s.avg_sim).max(0.0)))
        .collect();
    pts.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)));
    let mut area = 0.0;
    let mut best_r = 0.0;
    for (w, r) in pts {
        if r > best_r {
            area += w * (r - best_r);
            best_r = r;
        }
    }
    area
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontMember {
    pub budget: FlipBudget,
    pub scores: ObjectiveScores,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParetoFront {
    pub members: Vec<FrontMember>,
    pub config: GaConfig,
    pub fingerprint: String,
    /// Hypervolume of the rank-0 set after initialization and after each
    /// generation.
    pub hypervolume_history: Vec<f64>,
}

impl ParetoFront {
    pub fn best_accuracy(&self) -> Option<&FrontMember> {
        self.members.first()
    }

    pub fn best_robustness(&self) -> Option<&FrontMember> {
        self.members.last()
    }

    /// Header: `memberIndex,wAcc,avgSim,robustness,rowSum_1..rowSum_N,
    /// b_1_1..b_N_{M-1}` with the budget flattened row-major.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("memberIndex,wAcc,avgSim,robustness");
        if let Some(first) = self.members.first() {
            let b = &first.budget;
            for n in 1..=b.features() {
                write!(out, ",rowSum_{n}").unwrap();
            }
            for n in 1..=b.features() {
                for m in 1..=b.transitions() {
                    write!(out, ",b_{n}_{m}").unwrap();
                }
            }
        }
        out.push('\n');
        for (i, member) in self.members.iter().enumerate() {
            let s = &member.scores;
            write!(out, "{i},{},{},{}", s.wacc, s.avg_sim, s.robustness).unwrap();
            for sum in member.budget.row_sums() {
                write!(out, ",{sum}").unwrap();
            }
            for b in member.budget.flat() {
                write!(out, ",{b}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv().as_bytes())
    }
}

fn members_of(population: &[Individual]) -> Result<Vec<FrontMember>> {
    population
        .iter()
        .map(|ind| {
            Ok(FrontMember {
                budget: ind.budget.clone(),
                scores: ind.scores.ok_or_else(|| {
                    HdcError::InvalidArgument(format!("individual {} is unscored", ind.id))
                })?,
            })
        })
        .collect()
}

/// Feasible, budget-deduplicated, mutually non-dominated subset, ordered by
/// descending wAcc, then ascending avgSim, then budget.
pub fn non_dominated(candidates: impl IntoIterator<Item = FrontMember>) -> Vec<FrontMember> {
    let mut seen = BTreeSet::new();
    let pool: Vec<FrontMember> = candidates
        .into_iter()
        .filter(|m| m.scores.feasible && seen.insert(m.budget.clone()))
        .collect();
    let mut members: Vec<FrontMember> = pool
        .iter()
        .filter(|m| !pool.iter().any(|o| dominates(&o.scores, &m.scores)))
        .cloned()
        .collect();
    members.sort_by(|a, b| {
        b.scores
            .wacc
            .total_cmp(&a.scores.wacc)
            .then(a.scores.avg_sim.total_cmp(&b.scores.avg_sim))
            .then(a.budget.cmp(&b.budget))
    });
    members
}

fn front_hypervolume(population: &[Individual]) -> Result<f64> {
    let front = non_dominated(members_of(population)?);
    Ok(hypervolume(&front.iter().map(|m| m.scores).collect::<Vec<_>>()))
}

/// Runs `G` generations on a prepared problem and returns the feasible,
/// budget-deduplicated rank-0 set.
///
/// Besides the population, an archive keeps every non-dominated feasible
/// budget seen so far; the returned front is the rank-0 set of archive and
/// final population together. Crowding truncation can otherwise drop one of
/// several budgets with identical objectives.
pub fn run_optimization_on(problem: &TrainingProblem, config: &GaConfig) -> Result<ParetoFront> {
    config.validate()?;
    if problem.levels() != config.levels {
        return Err(HdcError::Shape(format!(
            "problem quantized to {} levels, config asks for {}",
            problem.levels(),
            config.levels
        )));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| HdcError::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        let mut population = initialize_population(config, problem.features())?;
        evaluate_population(problem, &mut population)?;
        let mut next_id = config.population as u64;
        let mut history = vec![front_hypervolume(&population)?];
        let mut archive = non_dominated(members_of(&population)?);
        for g in 0..config.generations {
            population = evolve_generation(population, problem, config, g as u64, &mut next_id)?;
            let hv = front_hypervolume(&population)?;
            debug!("generation {g}: hypervolume {hv:.6}");
            history.push(hv);
            archive = non_dominated(archive.into_iter().chain(members_of(&population)?));
        }
        let members = archive;
        info!(
            "optimization finished: {} front members, hypervolume {:.6}",
            members.len(),
            history.last().copied().unwrap_or(0.0)
        );
        Ok(ParetoFront {
            members,
            config: config.clone(),
            fingerprint: problem.fingerprint().to_string(),
            hypervolume_history: history,
        })
    })
}

/// Optimizes flip budgets for `train` with level seed `config.seed`.
pub fn run_optimization(train: &Dataset, quantizer: &Quantizer, config: &GaConfig) -> Result<ParetoFront> {
    let problem = TrainingProblem::new(train, quantizer, config.seed)?;
    run_optimization_on(&problem, config)
}
