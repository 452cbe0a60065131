use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bmo::bmo_v_norm;
use crate::commutator::{worst_case_search, BloomContext, SearchOutcome};
use crate::error::Result;
use crate::grid::{lp_norm, GridFunction, MultiGrid};
use crate::haar::{self, ParamSubset};
use crate::io::format_f64;
use crate::ops::paraproduct::{composed_paraproduct, flavor_tuples};
use crate::ops::{maximal, square_function, ExpansionFlavor, Flavor};
use crate::rng::{derive_seed, SplitMix64};
use crate::weights::{ap_constant, bloom_weight};

use super::config::{load_symbol, load_weight, random_function, Experiment, ExperimentConfig, FixtureMode};

/// One instance of an ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub seed: u64,
    pub mu_ap: f64,
    pub lambda_ap: Option<f64>,
    pub nu_a2: Option<f64>,
    pub bmo: Option<f64>,
    pub operators: String,
    pub numerator: f64,
    pub denominator: f64,
    pub ratio: f64,
    pub flagged: bool,
}

pub const CSV_HEADER: &str = "seed,mu_ap,lambda_ap,nu_a2,bmo,operators,numerator,denominator,ratio,flagged";

impl ReportRow {
    fn csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(format_f64).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.seed,
            format_f64(self.mu_ap),
            opt(self.lambda_ap),
            opt(self.nu_a2),
            opt(self.bmo),
            self.operators,
            format_f64(self.numerator),
            format_f64(self.denominator),
            format_f64(self.ratio),
            self.flagged
        )
    }
}

/// Order statistics of the finite ratios; quantiles use the nearest rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub count: usize,
    pub flagged: usize,
    pub non_finite: usize,
    pub min: f64,
    pub median: f64,
    pub q90: f64,
    pub max: f64,
    pub mean: f64,
}

impl Summary {
    pub fn from_rows(rows: &[ReportRow]) -> Self {
        let mut finite: Vec<f64> = rows.iter().map(|r| r.ratio).filter(|r| r.is_finite()).collect();
        finite.sort_by(f64::total_cmp);
        let rank = |q: f64| -> f64 {
            if finite.is_empty() {
                return 0.0;
            }
            let r = ((q * finite.len() as f64).ceil() as usize).clamp(1, finite.len());
            finite[r - 1]
        };
        Summary {
            count: rows.len(),
            flagged: rows.iter().filter(|r| r.flagged).count(),
            non_finite: rows.len() - finite.len(),
            min: finite.first().copied().unwrap_or(0.0),
            median: rank(0.5),
            q90: rank(0.9),
            max: finite.last().copied().unwrap_or(0.0),
            mean: if finite.is_empty() { 0.0 } else { finite.iter().sum::<f64>() / finite.len() as f64 },
        }
    }

    fn stats(&self) -> [(&'static str, f64); 5] {
        [("min", self.min), ("median", self.median), ("q90", self.q90), ("max", self.max), ("mean", self.mean)]
    }

    /// Names of statistics differing by more than `tol` relative.
    pub fn drift(&self, reference: &Summary, tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        for (name, a, b) in [
            ("count", self.count, reference.count),
            ("flagged", self.flagged, reference.flagged),
            ("non_finite", self.non_finite, reference.non_finite),
        ] {
            if a != b {
                out.push(format!("{name}: {a} vs fixture {b}"));
            }
        }
        for ((name, a), (_, b)) in self.stats().into_iter().zip(reference.stats()) {
            if (a - b).abs() > tol * a.abs().max(b.abs()) {
                out.push(format!("{name}: {} vs fixture {}", format_f64(a), format_f64(b)));
            }
        }
        out
    }
}

/// Not part of the deterministic output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentStamp {
    pub crate_version: String,
    pub levels: Vec<usize>,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub name: String,
    pub rows: Vec<ReportRow>,
    pub summary: Summary,
    pub stamp: EnvironmentStamp,
}

impl ExperimentReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.csv());
            out.push('\n');
        }
        out
    }

    pub fn summary_json(&self) -> String {
        let v = serde_json::json!({ "name": self.name, "summary": self.summary, "stamp": self.stamp });
        serde_json::to_string_pretty(&v).expect("serializable") + "\n"
    }

    /// Writes the CSV and a `<stem>.summary.json` sidecar; returns the sidecar path.
    pub fn write(&self, csv_path: &Path) -> Result<PathBuf> {
        if let Some(dir) = csv_path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(csv_path, self.to_csv())?;
        let sidecar = csv_path.with_extension("summary.json");
        std::fs::write(&sidecar, self.summary_json())?;
        Ok(sidecar)
    }
}

/// Frozen summary of a shipped configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixture {
    pub name: String,
    pub summary: Summary,
}

pub const FIXTURE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum FixtureOutcome {
    Matched,
    Regenerated(PathBuf),
    Missing(PathBuf),
    Drifted(Vec<String>),
}

impl Fixture {
    pub fn load(path: &Path) -> Result<Self> {
        super::config::parse_json(&std::fs::read_to_string(path)?, &path.display().to_string())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, serde_json::to_string_pretty(self).expect("serializable") + "\n")?;
        Ok(())
    }
}

/// Compares against, or rewrites, the fixture named by the config.
pub fn apply_fixture(cfg: &ExperimentConfig, report: &ExperimentReport, mode: FixtureMode) -> Result<Option<FixtureOutcome>> {
    let Some(path) = &cfg.fixture_path else { return Ok(None) };
    let current = Fixture { name: report.name.clone(), summary: report.summary.clone() };
    Ok(Some(match mode {
        FixtureMode::Regenerate => {
            current.save(path)?;
            FixtureOutcome::Regenerated(path.clone())
        }
        FixtureMode::Check if !path.exists() => FixtureOutcome::Missing(path.clone()),
        FixtureMode::Check => {
            let frozen = Fixture::load(path)?;
            let drift = current.summary.drift(&frozen.summary, FIXTURE_TOLERANCE);
            if drift.is_empty() {
                FixtureOutcome::Matched
            } else {
                FixtureOutcome::Drifted(drift)
            }
        }
    }))
}

/// Random function with every Haar coefficient touching a top average zeroed.
fn mean_zero_function(grid: &MultiGrid, seed: u64) -> GridFunction {
    let dims = grid.dims();
    let all: Vec<usize> = (0..grid.m()).collect();
    let mut rng = SplitMix64::new(seed);
    let coeffs: Vec<f64> = (0..grid.len())
        .map(|flat| {
            let v = rng.uniform(-1.0, 1.0);
            if grid.unflatten(flat).contains(&0) {
                0.0
            } else {
                v
            }
        })
        .collect();
    GridFunction::new(grid.clone(), haar::inverse_axes(&coeffs, &dims, &all)).expect("finite")
}

fn run_instance(cfg: &ExperimentConfig, grid: &MultiGrid, index: usize) -> Result<ReportRow> {
    let seed = cfg.instance_seed(index);
    let all = ParamSubset::all(grid);
    let axes_label = all.axes().iter().map(|a| a.to_string()).collect::<Vec<_>>().join(".");
    let mu = load_weight(&cfg.mu, grid, derive_seed(seed, 1))?;
    let p = cfg.p;
    match &cfg.experiment {
        Experiment::SquareFunction => {
            let f = mean_zero_function(grid, derive_seed(seed, 4));
            let num = lp_norm(&f, p, mu.values())?;
            let (_, den) = square_function(&f, &all, &mu, p)?;
            let r = num / den;
            Ok(ReportRow {
                seed,
                mu_ap: ap_constant(&mu, p)?,
                lambda_ap: None,
                nu_a2: None,
                bmo: None,
                operators: format!("square[{axes_label}]"),
                numerator: num,
                denominator: den,
                ratio: r.max(r.recip()),
                flagged: false,
            })
        }
        Experiment::FeffermanStein { family, q } => {
            let mut lhs = GridFunction::zeros(grid);
            let mut rhs = GridFunction::zeros(grid);
            for j in 0..*family {
                let f = random_function(grid, derive_seed(seed, 32 + j as u64));
                let mf = maximal(&f, &all)?;
                lhs = lhs.add(&mf.map(|v| v.powf(*q)))?;
                rhs = rhs.add(&f.map(|v| v.abs().powf(*q)))?;
            }
            let num = lp_norm(&lhs.map(|v| v.powf(q.recip())), p, mu.values())?;
            let den = lp_norm(&rhs.map(|v| v.powf(q.recip())), p, mu.values())?;
            Ok(ReportRow {
                seed,
                mu_ap: ap_constant(&mu, p)?,
                lambda_ap: None,
                nu_a2: None,
                bmo: None,
                operators: format!("maximal[{axes_label}]x{family}"),
                numerator: num,
                denominator: den,
                ratio: num / den,
                flagged: false,
            })
        }
        Experiment::LegalParaproduct => {
            let lambda = load_weight(&cfg.lambda, grid, derive_seed(seed, 2))?;
            let nu = bloom_weight(&mu, &lambda, p)?;
            let b = load_symbol(&cfg.symbol, grid, derive_seed(seed, 3))?;
            let f = random_function(grid, derive_seed(seed, 4));
            let f_norm = lp_norm(&f, p, mu.values())?;
            let axes: Vec<usize> = all.axes().to_vec();
            let mut best: Option<(f64, String, f64, f64, f64)> = None;
            for flavors in flavor_tuples(grid.m()) {
                if flavors.contains(&ExpansionFlavor::Top) || flavors.iter().all(|&f| f == ExpansionFlavor::Para(Flavor::A3)) {
                    continue;
                }
                let u: Vec<usize> = axes.iter().copied().filter(|&a| flavors[a].tests_b()).collect();
                let bmo = bmo_v_norm(&b, &nu, &ParamSubset::new(u)?)?;
                let value = composed_paraproduct(&b, &f, &axes, &flavors)?;
                let num = lp_norm(&value, p, lambda.values())?;
                let den = bmo * f_norm;
                let ratio = if den > 0.0 { num / den } else if num == 0.0 { 0.0 } else { f64::INFINITY };
                let label: String = flavors.iter().map(|f| f.code()).collect();
                if best.as_ref().map_or(true, |b| ratio > b.0) {
                    best = Some((ratio, format!("A{label}"), bmo, num, den));
                }
            }
            let (ratio, label, bmo, num, den) = best.expect("at least one legal tuple");
            Ok(ReportRow {
                seed,
                mu_ap: ap_constant(&mu, p)?,
                lambda_ap: Some(ap_constant(&lambda, p)?),
                nu_a2: Some(ap_constant(&nu, 2.0)?),
                bmo: Some(bmo),
                operators: label,
                numerator: num,
                denominator: den,
                ratio,
                flagged: ratio.is_infinite(),
            })
        }
        Experiment::Bloom { .. } => {
            let lambda = load_weight(&cfg.lambda, grid, derive_seed(seed, 2))?;
            let b = load_symbol(&cfg.symbol, grid, derive_seed(seed, 3))?;
            let f = random_function(grid, derive_seed(seed, 4));
            let c = cfg.commutator(grid, index, seed)?.with_symbol(b)?;
            let rec = BloomContext::new(&mu, &lambda, p)?.measure(&c, &f)?;
            Ok(ReportRow {
                seed,
                mu_ap: rec.mu_ap,
                lambda_ap: Some(rec.lambda_ap),
                nu_a2: Some(rec.nu_a2),
                bmo: Some(rec.bmo),
                operators: c.operators().iter().map(|o| o.id()).collect::<Vec<_>>().join("+"),
                numerator: rec.numerator,
                denominator: rec.bmo * rec.input_norm,
                ratio: rec.ratio,
                flagged: rec.flagged,
            })
        }
    }
}

/// Worst-case search seeded from instance 0 of a commutator config: its
/// operators, weights and symbol grid.
pub fn run_search(cfg: &ExperimentConfig, budget: usize, seed: u64) -> Result<SearchOutcome> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let base = cfg.instance_seed(0);
    let mu = load_weight(&cfg.mu, &grid, derive_seed(base, 1))?;
    let lambda = load_weight(&cfg.lambda, &grid, derive_seed(base, 2))?;
    let template = cfg.commutator(&grid, 0, base)?;
    worst_case_search(&template, &mu, &lambda, cfg.p, budget, seed)
}

/// Runs every instance on the current rayon pool; rows come back sorted by seed.
pub fn run_ensemble(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let mut rows = (0..cfg.ensemble)
        .into_par_iter()
        .map(|i| run_instance(cfg, &grid, i))
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by_key(|r| r.seed);
    let summary = Summary::from_rows(&rows);
    Ok(ExperimentReport {
        name: cfg.name.clone(),
        rows,
        summary,
        stamp: EnvironmentStamp {
            crate_version: env!("CARGO_PKG_VERSION").into(),
            levels: cfg.levels.clone(),
            threads: rayon::current_num_threads(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(experiment: &str, extra: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(&format!(
            r#"{{"version": 1, "name": "t", "levels": [3, 2], "p": 2.0, "experiment": {experiment},
                "mu": {{"generated": {{"roughness": 0.3}}}}, "lambda": {{"generated": {{"roughness": 0.2}}}},
                "ensemble": 4, "seed": 40 {extra}}}"#
        ))
        .unwrap()
    }

    const SHIFTS: &str = r#"{"kind": "bloom", "commutators": [[{"type": "shift", "axes": [0], "complexity": [[1, 0]]}, {"type": "shift", "axes": [1], "complexity": [[0, 1]]}]]}"#;

    #[test]
    fn every_family_runs_and_is_finite() {
        for e in [
            SHIFTS,
            r#"{"kind": "square_function"}"#,
            r#"{"kind": "fefferman_stein", "family": 3, "q": 2.0}"#,
            r#"{"kind": "legal_paraproduct"}"#,
        ] {
            let r = run_ensemble(&cfg(e, "")).unwrap();
            assert_eq!(r.rows.len(), 4);
            assert!(r.rows.iter().all(|row| row.ratio.is_finite() && row.ratio > 0.0 && !row.flagged), "{e}");
            assert_eq!(r.rows.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![40, 41, 42, 43]);
        }
    }

    #[test]
    fn constant_symbol_gives_zero_rows() {
        let r = run_ensemble(&cfg(SHIFTS, r#", "symbol": {"constant": {"value": 2.0}}"#)).unwrap();
        assert!(r.rows.iter().all(|row| row.ratio == 0.0 && !row.flagged));
    }

    #[test]
    fn repeated_runs_are_byte_identical() {
        let c = cfg(SHIFTS, "");
        assert_eq!(run_ensemble(&c).unwrap().to_csv(), run_ensemble(&c).unwrap().to_csv());
    }

    #[test]
    fn summary_statistics() {
        let rows: Vec<ReportRow> = [3.0, 1.0, 2.0, f64::INFINITY]
            .iter()
            .enumerate()
            .map(|(i, &ratio)| ReportRow {
                seed: i as u64,
                mu_ap: 1.0,
                lambda_ap: None,
                nu_a2: None,
                bmo: None,
                operators: String::new(),
                numerator: 0.0,
                denominator: 0.0,
                ratio,
                flagged: ratio.is_infinite(),
            })
            .collect();
        let s = Summary::from_rows(&rows);
        assert_eq!((s.count, s.flagged, s.non_finite), (4, 1, 1));
        assert_eq!((s.min, s.median, s.q90, s.max, s.mean), (1.0, 2.0, 3.0, 3.0, 2.0));
        let mut moved = s.clone();
        moved.max *= 1.0 + 1e-8;
        assert_eq!(moved.drift(&s, FIXTURE_TOLERANCE).len(), 1);
        assert!(s.drift(&s, FIXTURE_TOLERANCE).is_empty());
    }
}
