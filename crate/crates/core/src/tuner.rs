//! Real-coded genetic algorithm over config parameters, minimizing OPI.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Deserialize;

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::metrics;
use crate::preset::preset;

/// Fitness assigned to runs that diverge.
pub const DIVERGENCE_PENALTY: f64 = 1e9;

/// Horizon used when scoring candidates (s).
pub const TUNING_HORIZON: f64 = 6.0;

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchEntry {
    pub path: String,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SearchSpace {
    pub entries: Vec<SearchEntry>,
}

impl SearchSpace {
    /// Box `[lower, upper]^dim` with placeholder paths, for plain function minimization.
    pub fn uniform(dim: usize, lower: f64, upper: f64) -> Self {
        let entries = (0..dim).map(|i| SearchEntry { path: format!("x{i}"), lower, upper }).collect();
        Self { entries }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    /// Checks bounds only.
    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::invalid_config("search space is empty"));
        }
        for e in &self.entries {
            if !(e.lower < e.upper) || !e.lower.is_finite() || !e.upper.is_finite() {
                return Err(Error::invalid_config(format!(
                    "`{}`: need finite lower < upper, got [{}, {}]",
                    e.path, e.lower, e.upper
                )));
            }
        }
        Ok(())
    }

    /// Checks bounds and that every path names a numeric key of `base`.
    pub fn validate_against(&self, base: &SimConfig) -> Result<()> {
        self.validate()?;
        for e in &self.entries {
            base.get_param(&e.path)?;
        }
        Ok(())
    }

    pub fn contains(&self, candidate: &[f64]) -> bool {
        candidate.len() == self.dim() && candidate.iter().zip(&self.entries).all(|(&x, e)| x >= e.lower && x <= e.upper)
    }

    /// `base` with every path set from `candidate`.
    pub fn instantiate(&self, base: &SimConfig, candidate: &[f64]) -> Result<SimConfig> {
        if candidate.len() != self.dim() {
            return Err(Error::invalid_input(format!(
                "candidate has {} entries, search space has {}",
                candidate.len(),
                self.dim()
            )));
        }
        let assignments: Vec<(&str, f64)> =
            self.entries.iter().map(|e| e.path.as_str()).zip(candidate.iter().copied()).collect();
        base.with_params(&assignments)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaConfig {
    pub population: usize,
    /// Generation cap, counting the initial random population as generation 0.
    pub generations: usize,
    pub crossover_rate: f64,
    /// Per-gene mutation probability.
    pub mutation_rate: f64,
    /// Initial mutation σ as a fraction of each parameter's range.
    pub mutation_scale: f64,
    /// σ fraction reached at the last planned generation (geometric schedule).
    pub mutation_scale_final: f64,
    pub tournament: usize,
    pub seed: u64,
    /// Maximum number of objective evaluations.
    pub budget: usize,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 50,
            generations: 1000,
            crossover_rate: 0.9,
            mutation_rate: 0.2,
            mutation_scale: 0.1,
            mutation_scale_final: 1e-3,
            tournament: 3,
            seed: 0,
            budget: 5000,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::invalid_config("evaluation budget must be > 0"));
        }
        if self.population < 4 {
            return Err(Error::invalid_config(format!("population must be >= 4, got {}", self.population)));
        }
        if self.generations == 0 {
            return Err(Error::invalid_config("generations must be >= 1"));
        }
        if self.tournament == 0 {
            return Err(Error::invalid_config("tournament size must be >= 1"));
        }
        for (name, r) in [("crossover_rate", self.crossover_rate), ("mutation_rate", self.mutation_rate)] {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::invalid_config(format!("{name} must lie in [0, 1], got {r}")));
            }
        }
        if !(self.mutation_scale > 0.0) || !(self.mutation_scale_final > 0.0) {
            return Err(Error::invalid_config("mutation scales must be > 0"));
        }
        Ok(())
    }

    /// Generations that fit in the budget, capped by `generations`.
    fn planned_generations(&self) -> usize {
        let first = self.population.min(self.budget);
        let rest = self.budget - first;
        let per_gen = self.population - 1;
        (1 + rest.div_ceil(per_gen)).min(self.generations)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaResult {
    pub best: Vec<f64>,
    pub fitness: f64,
    /// Best fitness after each generation.
    pub history: Vec<f64>,
    pub evaluations: usize,
}

fn sanitize(f: f64) -> f64 {
    if f.is_nan() {
        f64::INFINITY
    } else {
        f
    }
}

/// Minimizes `objective` over `space`. Deterministic for a fixed seed; the
/// objective is evaluated concurrently within each generation.
pub fn ga_optimize<F>(objective: F, space: &SearchSpace, cfg: &GaConfig) -> Result<GaResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    cfg.validate()?;
    space.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let dim = space.dim();
    let planned = cfg.planned_generations();
    let eval = |pop: &[Vec<f64>]| -> Vec<f64> { pop.par_iter().map(|c| sanitize(objective(c))).collect() };

    let n0 = cfg.population.min(cfg.budget);
    let mut pop: Vec<Vec<f64>> =
        (0..n0).map(|_| space.entries.iter().map(|e| rng.random_range(e.lower..=e.upper)).collect()).collect();
    let mut fit = eval(&pop);
    let mut evaluations = n0;
    let mut history = Vec::with_capacity(planned);
    let best_index = |fit: &[f64]| (0..fit.len()).min_by(|&a, &b| fit[a].total_cmp(&fit[b])).unwrap_or(0);
    history.push(fit[best_index(&fit)]);

    for gen in 1..planned {
        let progress = gen as f64 / (planned - 1).max(1) as f64;
        let scale = cfg.mutation_scale * (cfg.mutation_scale_final / cfg.mutation_scale).powf(progress);
        let n_children = (cfg.population - 1).min(cfg.budget - evaluations);
        if n_children == 0 {
            break;
        }

        let indices: Vec<usize> = (0..pop.len()).collect();
        let tournament = |rng: &mut ChaCha8Rng| -> usize {
            (0..cfg.tournament)
                .map(|_| *indices.choose(rng).expect("population is nonempty"))
                .min_by(|&a, &b| fit[a].total_cmp(&fit[b]))
                .expect("tournament size >= 1")
        };

        let mut children = Vec::with_capacity(n_children);
        for _ in 0..n_children {
            let pa = tournament(&mut rng);
            let pb = tournament(&mut rng);
            let cross = rng.random_bool(cfg.crossover_rate);
            let mut child: Vec<f64> =
                (0..dim).map(|j| if cross && rng.random_bool(0.5) { pop[pb][j] } else { pop[pa][j] }).collect();
            for (x, e) in child.iter_mut().zip(&space.entries) {
                if rng.random_bool(cfg.mutation_rate) {
                    let sigma = scale * (e.upper - e.lower);
                    let step: f64 = Normal::new(0.0, sigma).expect("sigma is positive").sample(&mut rng);
                    *x = (*x + step).clamp(e.lower, e.upper);
                }
            }
            children.push(child);
        }
        let child_fit = eval(&children);
        evaluations += children.len();

        let elite = best_index(&fit);
        let mut next_pop = Vec::with_capacity(children.len() + 1);
        let mut next_fit = Vec::with_capacity(children.len() + 1);
        next_pop.push(pop[elite].clone());
        next_fit.push(fit[elite]);
        next_pop.extend(children);
        next_fit.extend(child_fit);
        pop = next_pop;
        fit = next_fit;
        history.push(fit[best_index(&fit)]);
    }

    let b = best_index(&fit);
    Ok(GaResult { best: pop[b].clone(), fitness: fit[b], history, evaluations })
}

/// OPI of `base` with `candidate` applied, over the tuning horizon.
/// Divergent runs score [`DIVERGENCE_PENALTY`].
pub fn evaluate(candidate: &[f64], base: &SimConfig, space: &SearchSpace) -> Result<f64> {
    if !space.contains(candidate) {
        return Err(Error::invalid_input("candidate lies outside the search space"));
    }
    let mut cfg = space.instantiate(base, candidate)?;
    cfg.scenario.tf = TUNING_HORIZON;
    cfg.metrics.tf = TUNING_HORIZON;
    cfg.scenario.events.retain(|e| e.time <= TUNING_HORIZON);
    match cfg.run() {
        Ok(record) => {
            let opi = metrics::evaluate(&record, &cfg.metrics)?.opi;
            Ok(if opi.is_finite() { opi } else { DIVERGENCE_PENALTY })
        }
        Err(Error::Diverged { .. }) => Ok(DIVERGENCE_PENALTY),
        Err(e) => Err(e),
    }
}

/// A tuning job: base config, parameters to search and GA settings.
#[derive(Clone, Debug)]
pub struct TuneSpec {
    pub base: SimConfig,
    pub space: SearchSpace,
    pub ga: GaConfig,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TuneFile {
    base: String,
    #[serde(default)]
    ga: GaFile,
    param: Vec<SearchEntry>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct GaFile {
    population: Option<usize>,
    generations: Option<usize>,
    crossover_rate: Option<f64>,
    mutation_rate: Option<f64>,
    mutation_scale: Option<f64>,
    mutation_scale_final: Option<f64>,
    tournament: Option<usize>,
    seed: Option<u64>,
    budget: Option<usize>,
}

impl TuneSpec {
    /// Parses a search-space file:
    ///
    /// ```toml
    /// base = "s1-leso"          # preset name or path to a config file
    /// [ga]                      # any GaConfig field; omitted ones keep defaults
    /// budget = 200
    /// seed = 3
    /// [[param]]
    /// path = "observer.omega0"
    /// lower = 100.0
    /// upper = 1000.0
    /// ```
    ///
    /// `load_config` resolves a non-preset `base` to its file contents.
    pub fn from_toml_str(s: &str, load_config: impl Fn(&str) -> Result<String>) -> Result<Self> {
        let file: TuneFile = toml::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        let base = match preset(&file.base) {
            Ok(p) => p,
            Err(Error::UnknownPreset { .. }) => SimConfig::from_toml_str(&load_config(&file.base)?)?,
            Err(e) => return Err(e),
        };
        let d = GaConfig::default();
        let g = file.ga;
        let ga = GaConfig {
            population: g.population.unwrap_or(d.population),
            generations: g.generations.unwrap_or(d.generations),
            crossover_rate: g.crossover_rate.unwrap_or(d.crossover_rate),
            mutation_rate: g.mutation_rate.unwrap_or(d.mutation_rate),
            mutation_scale: g.mutation_scale.unwrap_or(d.mutation_scale),
            mutation_scale_final: g.mutation_scale_final.unwrap_or(d.mutation_scale_final),
            tournament: g.tournament.unwrap_or(d.tournament),
            seed: g.seed.unwrap_or(d.seed),
            budget: g.budget.unwrap_or(d.budget),
        };
        let space = SearchSpace { entries: file.param };
        ga.validate()?;
        space.validate_against(&base)?;
        Ok(Self { base, space, ga })
    }

    /// Runs the GA and returns the tuned config alongside the raw result.
    pub fn run(&self) -> Result<(SimConfig, GaResult)> {
        self.space.validate_against(&self.base)?;
        let objective = |c: &[f64]| evaluate(c, &self.base, &self.space).unwrap_or(DIVERGENCE_PENALTY);
        let res = ga_optimize(objective, &self.space, &self.ga)?;
        let mut best = self.space.instantiate(&self.base, &res.best)?;
        best.name = format!("{}-tuned", self.base.name);
        Ok((best, res))
    }
}
