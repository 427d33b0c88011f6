//! Flag and config-file resolution. Flags win over the file, the file wins
//! over built-in defaults.

use std::path::{Path, PathBuf};

use clap::Args;
use hdc_core::data::LabelColumn;
use hdc_core::GaConfig;
use serde::{Deserialize, Serialize};

use crate::Failure;

/// Every key a config file may set. Keys mirror the long flag names.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub dim: Option<usize>,
    pub levels: Option<usize>,
    pub label_column: Option<String>,
    pub pop: Option<usize>,
    pub gens: Option<usize>,
    pub crossover: Option<f64>,
    pub mutation: Option<f64>,
    pub tournament: Option<usize>,
    pub workers: Option<usize>,
    pub dims: Option<Vec<usize>>,
    pub grid: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::input("read config", format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::input("parse config", format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Master seed for level vectors, search and synthetic data.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Hypervector dimensionality D (even).
    #[arg(long)]
    pub dim: Option<usize>,
    /// Quantization levels M per feature.
    #[arg(long)]
    pub levels: Option<usize>,
    /// Label column: a header name, a 0-based index, or "last".
    #[arg(long)]
    pub label_column: Option<String>,
    /// TOML file with defaults for any of these flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GaArgs {
    /// Population size (even).
    #[arg(long)]
    pub pop: Option<usize>,
    /// Generations.
    #[arg(long)]
    pub gens: Option<usize>,
    /// Crossover probability per pair.
    #[arg(long)]
    pub crossover: Option<f64>,
    /// Per-gene mutation probability; defaults to 1 / (N (M - 1)).
    #[arg(long)]
    pub mutation: Option<f64>,
    /// Tournament size.
    #[arg(long)]
    pub tournament: Option<usize>,
    /// Evaluation threads, 0 for all cores. Results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
}

/// The fully resolved settings of a run, logged as one JSON line.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub seed: u64,
    pub dim: usize,
    pub levels: usize,
    pub label_column: String,
}

impl Resolved {
    pub fn new(common: &CommonArgs, file: &FileConfig) -> Self {
        let defaults = GaConfig::default();
        Self {
            seed: common.seed.or(file.seed).unwrap_or(defaults.seed),
            dim: common.dim.or(file.dim).unwrap_or(defaults.dim),
            levels: common.levels.or(file.levels).unwrap_or(defaults.levels),
            label_column: common
                .label_column
                .clone()
                .or_else(|| file.label_column.clone())
                .unwrap_or_else(|| "last".into()),
        }
    }

    pub fn label(&self) -> LabelColumn {
        if self.label_column.eq_ignore_ascii_case("last") {
            LabelColumn::Last
        } else {
            self.label_column.parse().unwrap()
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GaSettings {
    pub pop: usize,
    pub gens: usize,
    pub crossover: f64,
    pub mutation: Option<f64>,
    pub tournament: usize,
    pub workers: usize,
}

impl GaSettings {
    pub fn new(args: &GaArgs, file: &FileConfig) -> Self {
        let d = GaConfig::default();
        Self {
            pop: args.pop.or(file.pop).unwrap_or(d.population),
            gens: args.gens.or(file.gens).unwrap_or(d.generations),
            crossover: args.crossover.or(file.crossover).unwrap_or(d.crossover_rate),
            mutation: args.mutation.or(file.mutation),
            tournament: args.tournament.or(file.tournament).unwrap_or(d.tournament_size),
            workers: args.workers.or(file.workers).unwrap_or(d.workers),
        }
    }

    pub fn to_config(&self, base: &Resolved) -> GaConfig {
        GaConfig {
            population: self.pop,
            generations: self.gens,
            crossover_rate: self.crossover,
            mutation_rate: self.mutation,
            tournament_size: self.tournament,
            seed: base.seed,
            dim: base.dim,
            levels: base.levels,
            workers: self.workers,
        }
    }
}
