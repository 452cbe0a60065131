use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bmo::{bmo_v_norm, little_bmo_norm, little_product_bmo_norm, product_bmo_norm, Partition, TestFamily};
use crate::error::{Error, Result};
use crate::grid::{lp_norm_unweighted, GridFunction, MultiGrid};
use crate::haar::ParamSubset;
use crate::io::{self, format_f64};
use crate::ops::{maximal, square_function};
use crate::weights::{ainf_constant, ap_constant, gen_ap_weight, slice_ap_constant, Weight};

use super::config::{check_version, parse_json, random_function};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum NormInput {
    File { path: PathBuf },
    Random { seed: u64 },
    Weight { seed: u64, roughness: f64 },
    Constant { value: f64 },
}

/// Scalar functional evaluated on each input; BMO functionals are unweighted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Functional {
    Lp { p: f64 },
    Ap { p: f64 },
    SliceAp { p: f64, axis: usize },
    Ainf { axis: usize },
    ProductBmo {
        #[serde(default)]
        unions: usize,
    },
    LittleBmo,
    BmoV { axes: Vec<usize> },
    LittleProductBmo { blocks: Vec<Vec<usize>> },
    /// `‖M^v f‖_{L^p}`.
    Maximal { axes: Vec<usize>, p: f64 },
    /// `‖S^v f‖_{L^p}`.
    SquareFunction { axes: Vec<usize>, p: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormsConfig {
    pub version: u32,
    pub name: String,
    pub levels: Vec<usize>,
    pub inputs: Vec<NormInput>,
    pub functionals: Vec<Functional>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

pub const NORMS_HEADER: &str = "kind,axes,p,value,seed,source";

impl NormsConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: Self = parse_json(&std::fs::read_to_string(path)?, &path.display().to_string())?;
        let base = path.parent().unwrap_or(Path::new("."));
        for input in &mut cfg.inputs {
            if let NormInput::File { path } = input {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        }
        if let Some(out) = &mut cfg.output {
            if out.is_relative() {
                *out = base.join(&*out);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = parse_json(text, "config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check_version(self.version)?;
        let grid = MultiGrid::new(self.levels.clone()).map_err(|e| Error::Config(format!("levels: {e}")))?;
        if self.inputs.is_empty() || self.functionals.is_empty() {
            return Err(Error::Config("inputs and functionals must be nonempty".into()));
        }
        for (n, f) in self.functionals.iter().enumerate() {
            let axes: Vec<usize> = match f {
                Functional::SliceAp { axis, .. } | Functional::Ainf { axis } => vec![*axis],
                Functional::BmoV { axes } | Functional::Maximal { axes, .. } | Functional::SquareFunction { axes, .. } => axes.clone(),
                Functional::LittleProductBmo { blocks } => blocks.concat(),
                _ => Vec::new(),
            };
            if let Some(a) = axes.iter().find(|&&a| a >= grid.m()) {
                return Err(Error::Config(format!("functionals[{n}]: axis {a} out of range")));
            }
        }
        Ok(())
    }
}

fn axes_text(axes: &[usize]) -> String {
    if axes.is_empty() {
        "-".into()
    } else {
        axes.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(".")
    }
}

fn evaluate(f: &Functional, x: &GridFunction) -> Result<(&'static str, String, Option<f64>, f64)> {
    let grid = x.grid();
    let all: Vec<usize> = (0..grid.m()).collect();
    let unit = Weight::unit(grid);
    let sub = |axes: &[usize]| ParamSubset::new(axes.to_vec());
    Ok(match f {
        Functional::Lp { p } => ("lp", axes_text(&all), Some(*p), lp_norm_unweighted(x, *p)?),
        Functional::Ap { p } => ("ap", axes_text(&all), Some(*p), ap_constant(&Weight::new(x.clone())?, *p)?),
        Functional::SliceAp { p, axis } => ("slice_ap", axes_text(&[*axis]), Some(*p), slice_ap_constant(&Weight::new(x.clone())?, *p, *axis)?),
        Functional::Ainf { axis } => ("ainf", axes_text(&[*axis]), None, ainf_constant(&Weight::new(x.clone())?, *axis)?),
        Functional::ProductBmo { unions } => {
            let family = if *unions == 0 { TestFamily::Rectangles } else { TestFamily::RectanglesPlusUnions(*unions) };
            ("product_bmo", axes_text(&all), None, product_bmo_norm(x, &unit, &ParamSubset::all(grid), family)?)
        }
        Functional::LittleBmo => ("little_bmo", axes_text(&all), None, little_bmo_norm(x, &unit)?),
        Functional::BmoV { axes } => ("bmo_v", axes_text(axes), None, bmo_v_norm(x, &unit, &sub(axes)?)?),
        Functional::LittleProductBmo { blocks } => {
            let text = blocks.iter().map(|b| axes_text(b)).collect::<Vec<_>>().join("|");
            ("little_product_bmo", text, None, little_product_bmo_norm(x, &unit, &Partition::new(blocks.clone(), grid.m())?)?)
        }
        Functional::Maximal { axes, p } => ("maximal", axes_text(axes), Some(*p), lp_norm_unweighted(&maximal(x, &sub(axes)?)?, *p)?),
        Functional::SquareFunction { axes, p } => ("square_function", axes_text(axes), Some(*p), square_function(x, &sub(axes)?, &unit, *p)?.1),
    })
}

fn materialize(input: &NormInput, grid: &MultiGrid) -> Result<(GridFunction, Option<u64>, String)> {
    Ok(match input {
        NormInput::File { path } => {
            let f = io::load_grid_function(path)?;
            if f.grid() != grid {
                return Err(Error::Config(format!("{}: grid differs from levels", path.display())));
            }
            (f, None, format!("file:{}", path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()))
        }
        NormInput::Random { seed } => (random_function(grid, *seed), Some(*seed), "random".into()),
        NormInput::Weight { seed, roughness } => (gen_ap_weight(*seed, grid, *roughness)?.values().clone(), Some(*seed), "weight".into()),
        NormInput::Constant { value } => (GridFunction::constant(grid, *value), None, "constant".into()),
    })
}

/// One row per functional per input, inputs outermost.
pub fn run_norms(cfg: &NormsConfig) -> Result<String> {
    cfg.validate()?;
    let grid = MultiGrid::new(cfg.levels.clone())?;
    let mut out = String::from(NORMS_HEADER);
    out.push('\n');
    for input in &cfg.inputs {
        let (x, seed, source) = materialize(input, &grid)?;
        for f in &cfg.functionals {
            let (kind, axes, p, value) = evaluate(f, &x)?;
            out.push_str(&format!(
                "{kind},{axes},{},{},{},{source}\n",
                p.map(format_f64).unwrap_or_default(),
                format_f64(value),
                seed.map(|s| s.to_string()).unwrap_or_default()
            ));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(inputs: &str, functionals: &str) -> NormsConfig {
        NormsConfig::from_json(&format!(
            r#"{{"version": 1, "name": "n", "levels": [3, 3], "inputs": {inputs}, "functionals": {functionals}}}"#
        ))
        .unwrap()
    }

    fn values(csv: &str) -> Vec<(String, f64)> {
        csv.lines().skip(1).map(|l| {
            let cols: Vec<&str> = l.split(',').collect();
            (cols[0].to_string(), cols[3].parse().unwrap())
        }).collect()
    }

    #[test]
    fn constant_input_has_zero_bmo_and_unit_ap() {
        let csv = run_norms(&cfg(
            r#"[{"constant": {"value": 1.0}}]"#,
            r#"[{"kind": "product_bmo"}, {"kind": "little_bmo"}, {"kind": "bmo_v", "axes": [1]},
                {"kind": "little_product_bmo", "blocks": [[0], [1]]}, {"kind": "ap", "p": 2.0}, {"kind": "slice_ap", "p": 3.0, "axis": 0}]"#,
        ))
        .unwrap();
        assert!(csv.starts_with("kind,axes,p,value,seed,source\n"));
        for (kind, v) in values(&csv) {
            let expected = if kind.contains("ap") { 1.0 } else { 0.0 };
            assert_eq!(v, expected, "{kind}");
        }
    }

    #[test]
    fn rows_carry_seed_and_source() {
        let csv = run_norms(&cfg(r#"[{"random": {"seed": 5}}, {"weight": {"seed": 6, "roughness": 0.3}}]"#, r#"[{"kind": "lp", "p": 2.0}]"#)).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("lp,0.1,2.0,") && lines[1].ends_with(",5,random"));
        assert!(lines[2].ends_with(",6,weight"));
    }

    #[test]
    fn bad_functional_field_named() {
        let err = NormsConfig::from_json(r#"{"version": 1, "name": "n", "levels": [2], "inputs": [{"random": {"seed": 1}}], "functionals": [{"kind": "lp", "q": 2}]}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains('q'), "{err}");
    }
}
