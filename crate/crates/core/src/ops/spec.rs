use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, MultiGrid};
use crate::haar::ParamSubset;

use super::full::{FullFlavor, FullParaSpec};
use super::generate::{gen_full, gen_partial, gen_shift};
use super::paraproduct::{Flavor, ParaproductOp};
use super::partial::{PartialEntry, PartialParaSpec};
use super::shift::{ShiftCoeff, ShiftSpec};

/// A validated model operator.
#[derive(Debug, Clone, PartialEq)]
pub enum OperatorSpec {
    Shift(ShiftSpec),
    PartialParaproduct(PartialParaSpec),
    FullParaproduct(FullParaSpec),
    Paraproduct(ParaproductOp),
}

impl OperatorSpec {
    pub fn grid(&self) -> &MultiGrid {
        match self {
            OperatorSpec::Shift(s) => s.grid(),
            OperatorSpec::PartialParaproduct(p) => p.grid(),
            OperatorSpec::FullParaproduct(p) => p.grid(),
            OperatorSpec::Paraproduct(p) => p.grid(),
        }
    }

    /// Active axes, ascending.
    pub fn axes(&self) -> Vec<usize> {
        match self {
            OperatorSpec::Shift(s) => s.axes().to_vec(),
            OperatorSpec::PartialParaproduct(p) => p.axes(),
            OperatorSpec::FullParaproduct(p) => p.pair().to_vec(),
            OperatorSpec::Paraproduct(p) => vec![p.axis],
        }
    }

    pub fn is_paraproduct_free(&self) -> bool {
        matches!(self, OperatorSpec::Shift(_))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            OperatorSpec::Shift(_) => "shift",
            OperatorSpec::PartialParaproduct(_) => "partial_paraproduct",
            OperatorSpec::FullParaproduct(_) => "full_paraproduct",
            OperatorSpec::Paraproduct(_) => "paraproduct",
        }
    }

    /// Short identifier without commas, e.g. `shift[0.1](1:0.0:2)`.
    pub fn id(&self) -> String {
        let axes = |v: &[usize]| v.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(".");
        match self {
            OperatorSpec::Shift(s) => {
                let cx: Vec<String> = s.complexity().iter().map(|(k, l)| format!("{k}:{l}")).collect();
                format!("shift[{}]({})", axes(s.axes()), cx.join("."))
            }
            OperatorSpec::PartialParaproduct(p) => {
                let ((s, t), (k, l)) = (p.pair(), p.complexity());
                format!("partial[{s}>{t}]({k}:{l}){}", if p.is_adjoint() { "*" } else { "" })
            }
            OperatorSpec::FullParaproduct(p) => {
                let flavor = serde_json::to_value(p.flavor()).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
                format!("full[{}]({flavor})", axes(&p.pair()))
            }
            OperatorSpec::Paraproduct(p) => format!("para[{}]({:?})", p.axis, p.flavor),
        }
    }

    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        match self {
            OperatorSpec::Shift(s) => s.apply(f),
            OperatorSpec::PartialParaproduct(p) => p.apply(f),
            OperatorSpec::FullParaproduct(p) => p.apply(f),
            OperatorSpec::Paraproduct(p) => p.apply(f),
        }
    }
}

/// One explicit coefficient `(K, I, J, value)` with packed per-axis indices.
pub type Quadruple = (Vec<usize>, Vec<usize>, Vec<usize>, f64);

/// JSON form of an operator, either seeded or with explicit coefficients.
///
/// * `shift`: `axes` ascending, one `complexity` pair per axis, quadruples over those axes.
/// * `partial_paraproduct`: `axes = [s, t]`, one complexity pair for `s`,
///   quadruples `([K_s, K_t], [I_s], [J_s], value)`.
/// * `full_paraproduct`: `axes` ascending pair, `flavor` one of
///   `none | full | partial1 | partial2`, `symbol` row-major on the pair.
/// * `paraproduct`: one axis, `flavor` one of `A1 | A2 | A3`, `symbol` on the whole grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorFile {
    #[serde(rename = "type")]
    pub kind: String,
    pub levels: Vec<usize>,
    pub axes: Vec<usize>,
    #[serde(default)]
    pub complexity: Vec<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flavor: Option<String>,
    #[serde(default)]
    pub adjoint: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<Quadruple>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol: Option<Vec<f64>>,
}

fn parse_enum<T: for<'de> Deserialize<'de>>(s: &str) -> Result<T> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| Error::Config(format!("unknown flavor {s:?}")))
}

fn single_pair(c: &[(usize, usize)]) -> Result<(usize, usize)> {
    match c {
        [p] => Ok(*p),
        _ => Err(Error::Config("exactly one complexity pair expected".into())),
    }
}

impl OperatorFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    /// Builds and validates the operator.
    pub fn build(&self) -> Result<OperatorSpec> {
        let grid = MultiGrid::new(self.levels.clone())?;
        let theta = self.theta.unwrap_or(1.0);
        match self.kind.as_str() {
            "shift" => {
                let axes = ParamSubset::new(self.axes.clone())?;
                let spec = match (&self.coefficients, self.seed) {
                    (Some(q), _) => {
                        let coeffs = q.iter().map(|(k, i, j, v)| ShiftCoeff { k: k.clone(), i: i.clone(), j: j.clone(), value: *v }).collect();
                        ShiftSpec::new(&grid, &axes, self.complexity.clone(), coeffs)?
                    }
                    (None, Some(seed)) => gen_shift(seed, &grid, &axes, &self.complexity, theta)?,
                    (None, None) => return Err(Error::Config("shift needs a seed or coefficients".into())),
                };
                Ok(OperatorSpec::Shift(if self.adjoint { spec.adjoint() } else { spec }))
            }
            "partial_paraproduct" => {
                let [s, t] = self.axes[..] else {
                    return Err(Error::Config("partial paraproduct needs axes [s, t]".into()));
                };
                let complexity = single_pair(&self.complexity)?;
                let spec = match (&self.coefficients, self.seed) {
                    (Some(q), _) => {
                        let mut entries: Vec<PartialEntry> = Vec::new();
                        for (k, i, j, v) in q {
                            let (&[ks, kt], &[is], &[js]) = (&k[..], &i[..], &j[..]) else {
                                return Err(Error::Config("partial quadruple must be ([K_s, K_t], [I_s], [J_s], value)".into()));
                            };
                            match entries.iter_mut().find(|e| (e.k, e.i, e.j) == (ks, is, js)) {
                                Some(e) => e.seq.push((kt, *v)),
                                None => entries.push(PartialEntry { k: ks, i: is, j: js, seq: vec![(kt, *v)] }),
                            }
                        }
                        PartialParaSpec::new(&grid, s, t, complexity, entries, false)?
                    }
                    (None, Some(seed)) => gen_partial(seed, &grid, s, t, complexity, theta)?,
                    (None, None) => return Err(Error::Config("partial paraproduct needs a seed or coefficients".into())),
                };
                Ok(OperatorSpec::PartialParaproduct(if self.adjoint { spec.adjoint() } else { spec }))
            }
            "full_paraproduct" => {
                let pair: [usize; 2] = self.axes[..]
                    .try_into()
                    .map_err(|_| Error::Config("full paraproduct needs two axes".into()))?;
                let flavor: FullFlavor = parse_enum(self.flavor.as_deref().unwrap_or("none"))?;
                let spec = match (&self.symbol, self.seed) {
                    (Some(values), _) => FullParaSpec::new(&grid, pair, GridFunction::new(grid.sub_grid(&pair)?, values.clone())?, flavor)?,
                    (None, Some(seed)) => gen_full(seed, &grid, pair, flavor, theta)?,
                    (None, None) => return Err(Error::Config("full paraproduct needs a seed or symbol".into())),
                };
                Ok(OperatorSpec::FullParaproduct(spec))
            }
            "paraproduct" => {
                let [axis] = self.axes[..] else {
                    return Err(Error::Config("paraproduct needs one axis".into()));
                };
                let flavor: Flavor = parse_enum(self.flavor.as_deref().unwrap_or("A1"))?;
                let values = self.symbol.clone().ok_or_else(|| Error::Config("paraproduct needs a symbol".into()))?;
                Ok(OperatorSpec::Paraproduct(ParaproductOp::new(GridFunction::new(grid, values)?, axis, flavor)?))
            }
            other => Err(Error::Config(format!("unknown operator type {other:?}"))),
        }
    }

    /// Explicit-coefficient form of a validated operator.
    pub fn from_spec(spec: &OperatorSpec) -> Self {
        let grid = spec.grid();
        let mut file = OperatorFile {
            kind: spec.kind().into(),
            levels: grid.levels().to_vec(),
            axes: spec.axes(),
            complexity: Vec::new(),
            seed: None,
            theta: None,
            flavor: None,
            adjoint: false,
            coefficients: None,
            symbol: None,
        };
        match spec {
            OperatorSpec::Shift(s) => {
                file.complexity = s.complexity().to_vec();
                file.coefficients = Some(s.coeffs().iter().map(|c| (c.k.clone(), c.i.clone(), c.j.clone(), c.value)).collect());
            }
            OperatorSpec::PartialParaproduct(p) => {
                let (s, t) = p.pair();
                let (k, l) = p.complexity();
                file.axes = vec![s, t];
                file.complexity = vec![(k, l)];
                file.adjoint = p.is_adjoint();
                file.coefficients = Some(
                    p.entries()
                        .iter()
                        .flat_map(|e| e.seq.iter().map(move |&(kt, v)| (vec![e.k, kt], vec![e.i], vec![e.j], v)))
                        .collect(),
                );
            }
            OperatorSpec::FullParaproduct(p) => {
                file.flavor = Some(serde_json::to_value(p.flavor()).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default());
                file.symbol = Some(p.symbol().data().to_vec());
            }
            OperatorSpec::Paraproduct(p) => {
                file.flavor = Some(format!("{:?}", p.flavor));
                file.symbol = Some(p.symbol.data().to_vec());
            }
        }
        file
    }
}
