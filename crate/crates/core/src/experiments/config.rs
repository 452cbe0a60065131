use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, MultiGrid};
use crate::io;
use crate::ops::{OperatorFile, OperatorSpec};
use crate::rng::SplitMix64;
use crate::weights::{gen_ap_weight, Weight};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixtureMode {
    #[default]
    Check,
    Regenerate,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSource {
    #[default]
    Unit,
    /// Multiplicative cascade, seeded per instance.
    Generated { roughness: f64 },
    /// Fixed weight shared by every instance.
    File { path: PathBuf },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SymbolSource {
    /// Independent uniform values in `[-1, 1)` per cell, seeded per instance.
    #[default]
    Random,
    Constant { value: f64 },
    File { path: PathBuf },
}

fn one() -> f64 {
    1.0
}

/// Operator description without the grid; seeded per instance unless `seed` is fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorTemplate {
    #[serde(rename = "type")]
    pub kind: String,
    pub axes: Vec<usize>,
    #[serde(default)]
    pub complexity: Vec<(usize, usize)>,
    #[serde(default = "one")]
    pub theta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flavor: Option<String>,
    #[serde(default)]
    pub adjoint: bool,
}

impl OperatorTemplate {
    pub fn build(&self, grid: &MultiGrid, instance_seed: u64) -> Result<OperatorSpec> {
        OperatorFile {
            kind: self.kind.clone(),
            levels: grid.levels().to_vec(),
            axes: self.axes.clone(),
            complexity: self.complexity.clone(),
            seed: Some(self.seed.unwrap_or(instance_seed)),
            theta: Some(self.theta),
            flavor: self.flavor.clone(),
            adjoint: self.adjoint,
            coefficients: None,
            symbol: None,
        }
        .build()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    /// Bloom ratios of iterated commutators; instance `i` uses
    /// `commutators[i % len]`.
    Bloom { commutators: Vec<Vec<OperatorTemplate>> },
    /// `max(r, 1/r)` for `r = ‖f‖_{L^p(μ)} / ‖S f‖_{L^p(μ)}` on mean-zero `f`.
    SquareFunction,
    /// Vector-valued strong maximal inequality for `family` functions.
    FeffermanStein { family: usize, q: f64 },
    /// Largest ratio over every legal flavor tuple of the composed paraproduct.
    LegalParaproduct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub name: String,
    pub levels: Vec<usize>,
    pub p: f64,
    pub experiment: Experiment,
    #[serde(default)]
    pub mu: WeightSource,
    #[serde(default)]
    pub lambda: WeightSource,
    #[serde(default)]
    pub symbol: SymbolSource,
    pub ensemble: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub fixture: FixtureMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixture_path: Option<PathBuf>,
}

pub(crate) fn parse_json<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Config(format!("{origin}: {e}")))
}

fn rebase(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

pub(crate) fn check_version(version: u32) -> Result<()> {
    if version != CONFIG_VERSION {
        return Err(Error::Config(format!("version: expected {CONFIG_VERSION}, found {version}")));
    }
    Ok(())
}

impl ExperimentConfig {
    /// Reads, validates and resolves relative paths against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg: Self = parse_json(&text, &path.display().to_string())?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = parse_json(text, "config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        for w in [&mut self.mu, &mut self.lambda] {
            if let WeightSource::File { path } = w {
                rebase(base, path);
            }
        }
        if let SymbolSource::File { path } = &mut self.symbol {
            rebase(base, path);
        }
        if let Some(p) = &mut self.output {
            rebase(base, p);
        }
        if let Some(p) = &mut self.fixture_path {
            rebase(base, p);
        }
    }

    pub fn grid(&self) -> Result<MultiGrid> {
        MultiGrid::new(self.levels.clone()).map_err(|e| Error::Config(format!("levels: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        check_version(self.version)?;
        let grid = self.grid()?;
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(Error::Config(format!("p: must exceed 1, found {}", self.p)));
        }
        if self.ensemble == 0 {
            return Err(Error::Config("ensemble: must be at least 1".into()));
        }
        for (field, w) in [("mu", &self.mu), ("lambda", &self.lambda)] {
            if let WeightSource::Generated { roughness } = w {
                if !(0.0..1.0).contains(roughness) {
                    return Err(Error::Config(format!("{field}.roughness: must lie in [0, 1)")));
                }
            }
        }
        match &self.experiment {
            Experiment::Bloom { commutators } => {
                if commutators.is_empty() || commutators.iter().any(|c| c.is_empty()) {
                    return Err(Error::Config("experiment.commutators: needs nonempty operator lists".into()));
                }
                for (n, ops) in commutators.iter().enumerate() {
                    for op in ops {
                        if let Some(a) = op.axes.iter().find(|&&a| a >= grid.m()) {
                            return Err(Error::Config(format!("experiment.commutators[{n}].axes: axis {a} out of range")));
                        }
                    }
                    self.commutator(&grid, n, 0)
                        .map_err(|e| Error::Config(format!("experiment.commutators[{n}]: {e}")))?;
                }
            }
            Experiment::FeffermanStein { family, q } => {
                if *family == 0 || !(*q >= 1.0 && q.is_finite()) {
                    return Err(Error::Config("experiment: family must be positive and q at least 1".into()));
                }
            }
            Experiment::SquareFunction | Experiment::LegalParaproduct => {}
        }
        Ok(())
    }

    /// Seed of instance `i`; rows are reported in this order.
    pub fn instance_seed(&self, i: usize) -> u64 {
        self.seed.wrapping_add(i as u64)
    }

    /// Commutator of instance template `index` with operators seeded from `seed`
    /// and a zero symbol.
    pub fn commutator(&self, grid: &MultiGrid, index: usize, seed: u64) -> Result<crate::commutator::CommutatorSpec> {
        let Experiment::Bloom { commutators } = &self.experiment else {
            return Err(Error::Config("experiment: not a commutator experiment".into()));
        };
        let ops = commutators[index % commutators.len()]
            .iter()
            .enumerate()
            .map(|(j, t)| t.build(grid, crate::rng::derive_seed(seed, 16 + j as u64)))
            .collect::<Result<Vec<_>>>()?;
        crate::commutator::CommutatorSpec::new(ops, GridFunction::zeros(grid))
    }
}

pub(crate) fn load_weight(src: &WeightSource, grid: &MultiGrid, seed: u64) -> Result<Weight> {
    match src {
        WeightSource::Unit => Ok(Weight::unit(grid)),
        WeightSource::Generated { roughness } => gen_ap_weight(seed, grid, *roughness),
        WeightSource::File { path } => {
            let w = Weight::new(io::load_grid_function(path)?)?;
            if w.grid() != grid {
                return Err(Error::Config(format!("{}: weight grid differs from levels", path.display())));
            }
            Ok(w)
        }
    }
}

/// Independent uniform values in `[-1, 1)` per cell.
pub fn random_function(grid: &MultiGrid, seed: u64) -> GridFunction {
    let mut rng = SplitMix64::new(seed);
    GridFunction::from_fn(grid, |_| rng.uniform(-1.0, 1.0)).expect("finite")
}

pub(crate) fn load_symbol(src: &SymbolSource, grid: &MultiGrid, seed: u64) -> Result<GridFunction> {
    match src {
        SymbolSource::Random => Ok(random_function(grid, seed)),
        SymbolSource::Constant { value } => Ok(GridFunction::constant(grid, *value)),
        SymbolSource::File { path } => {
            let b = io::load_grid_function(path)?;
            if b.grid() != grid {
                return Err(Error::Config(format!("{}: symbol grid differs from levels", path.display())));
            }
            Ok(b)
        }
    }
}
