//! One-parameter paraproducts and their iterated multi-parameter compositions.
//!
//! Along one axis the product of two functions splits exactly as
//! `b f = A1(b,f) + A2(b,f) + A3(b,f) + ⟨b⟩⟨f⟩` where the last term is the
//! top-average correction of the finite domain. Iterating over several axes
//! gives `4^{|v|}` terms, `3^{|v|}` of which are genuine paraproducts.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, MultiGrid};
use crate::haar::ParamSubset;
use crate::kernels;

/// Paraproduct flavor: `A1 = Σ Δb Δf`, `A2 = Σ Δb E f`, `A3 = Σ E b Δf`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Flavor {
    A1,
    A2,
    A3,
}

/// Per-axis component of a product expansion term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExpansionFlavor {
    Para(Flavor),
    /// `⟨b⟩_top ⟨f⟩_top` along the axis.
    Top,
}

impl ExpansionFlavor {
    pub const ALL: [ExpansionFlavor; 4] = [
        ExpansionFlavor::Para(Flavor::A1),
        ExpansionFlavor::Para(Flavor::A2),
        ExpansionFlavor::Para(Flavor::A3),
        ExpansionFlavor::Top,
    ];

    /// Whether `b` enters through a cancellative component on this axis.
    pub fn tests_b(self) -> bool {
        matches!(self, ExpansionFlavor::Para(Flavor::A1 | Flavor::A2))
    }

    pub fn code(self) -> char {
        match self {
            ExpansionFlavor::Para(Flavor::A1) => '1',
            ExpansionFlavor::Para(Flavor::A2) => '2',
            ExpansionFlavor::Para(Flavor::A3) => '3',
            ExpansionFlavor::Top => 'T',
        }
    }
}

impl fmt::Display for ExpansionFlavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

/// Conditional expectation onto level `level` along `axis`.
fn cond_exp(data: &[f64], dims: &[usize], axis: usize, level: usize) -> Vec<f64> {
    let n = kernels::log2_exact(dims[axis]);
    if level == n {
        return data.to_vec();
    }
    let block = 1usize << (n - level);
    kernels::map_axis(data, dims, axis, dims[axis], |x, o| {
        for (cx, co) in x.chunks(block).zip(o.chunks_mut(block)) {
            let mean = cx.iter().sum::<f64>() / block as f64;
            co.fill(mean);
        }
    })
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn accumulate(
    b: &[f64],
    f: &[f64],
    dims: &[usize],
    axes: &[usize],
    flavors: &[ExpansionFlavor],
    out: &mut [f64],
) {
    let Some((&axis, rest_axes)) = axes.split_first() else {
        for ((o, x), y) in out.iter_mut().zip(b).zip(f) {
            *o += x * y;
        }
        return;
    };
    let rest_flavors = &flavors[1..];
    let flavor = flavors[0];
    if flavor == ExpansionFlavor::Top {
        let eb = cond_exp(b, dims, axis, 0);
        let ef = cond_exp(f, dims, axis, 0);
        accumulate(&eb, &ef, dims, rest_axes, rest_flavors, out);
        return;
    }
    let n = kernels::log2_exact(dims[axis]);
    let eb: Vec<Vec<f64>> = (0..=n).map(|l| cond_exp(b, dims, axis, l)).collect();
    let ef: Vec<Vec<f64>> = (0..=n).map(|l| cond_exp(f, dims, axis, l)).collect();
    for l in 0..n {
        let (pb, pf) = match flavor {
            ExpansionFlavor::Para(Flavor::A1) => (diff(&eb[l + 1], &eb[l]), diff(&ef[l + 1], &ef[l])),
            ExpansionFlavor::Para(Flavor::A2) => (diff(&eb[l + 1], &eb[l]), ef[l].clone()),
            ExpansionFlavor::Para(Flavor::A3) => (eb[l].clone(), diff(&ef[l + 1], &ef[l])),
            ExpansionFlavor::Top => unreachable!(),
        };
        accumulate(&pb, &pf, dims, rest_axes, rest_flavors, out);
    }
}

/// The composed term with one flavor per listed axis; unlisted axes multiply
/// pointwise.
pub fn composed_paraproduct(
    b: &GridFunction,
    f: &GridFunction,
    axes: &[usize],
    flavors: &[ExpansionFlavor],
) -> Result<GridFunction> {
    if b.grid() != f.grid() {
        return Err(Error::GridMismatch("paraproduct operands".into()));
    }
    if axes.len() != flavors.len() {
        return Err(Error::GridMismatch("one flavor per axis".into()));
    }
    ParamSubset::possibly_empty(axes.to_vec())?.check_in(b.grid())?;
    let mut out = vec![0.0; b.grid().len()];
    accumulate(b.data(), f.data(), &b.grid().dims(), axes, flavors, &mut out);
    Ok(GridFunction::from_parts(b.grid().clone(), out))
}

/// One-parameter paraproduct along `axis`, summed over levels `0..n`.
pub fn paraproduct(b: &GridFunction, f: &GridFunction, axis: usize, flavor: Flavor) -> Result<GridFunction> {
    composed_paraproduct(b, f, &[axis], &[ExpansionFlavor::Para(flavor)])
}

/// One term of the product expansion.
#[derive(Debug, Clone)]
pub struct ProductTerm {
    pub axes: Vec<usize>,
    pub flavors: Vec<ExpansionFlavor>,
    pub value: GridFunction,
}

impl ProductTerm {
    /// Every expanded axis carries the non-cancellative flavor `A3`.
    pub fn is_illegal(&self) -> bool {
        self.flavors.iter().all(|&f| f == ExpansionFlavor::Para(Flavor::A3))
    }

    pub fn is_correction(&self) -> bool {
        self.flavors.contains(&ExpansionFlavor::Top)
    }

    pub fn label(&self) -> String {
        let codes: String = self.flavors.iter().map(|f| f.code()).collect();
        let kind = if self.is_correction() {
            "corr"
        } else if self.is_illegal() {
            "illegal"
        } else {
            "legal"
        };
        format!("{codes}:{kind}")
    }
}

/// Every flavor assignment over `n` axes, lexicographic in `A1 < A2 < A3 < Top`.
pub fn flavor_tuples(n: usize) -> Vec<Vec<ExpansionFlavor>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|p| {
                ExpansionFlavor::ALL.iter().map(move |&f| {
                    let mut v = p.clone();
                    v.push(f);
                    v
                })
            })
            .collect();
    }
    out
}

/// All `4^{|v|}` terms whose sum is the pointwise product `b f`.
pub fn product_expansion(b: &GridFunction, f: &GridFunction, v: &ParamSubset) -> Result<Vec<ProductTerm>> {
    if v.is_empty() {
        return Err(Error::EmptySubset);
    }
    v.check_in(b.grid())?;
    let axes = v.sorted();
    flavor_tuples(axes.len())
        .into_iter()
        .map(|flavors| {
            let value = composed_paraproduct(b, f, &axes, &flavors)?;
            Ok(ProductTerm { axes: axes.clone(), flavors, value })
        })
        .collect()
}

/// `f ↦ A_flavor(symbol, f)` along one axis, as a linear operator.
#[derive(Debug, Clone, PartialEq)]
pub struct ParaproductOp {
    pub axis: usize,
    pub flavor: Flavor,
    pub symbol: GridFunction,
}

impl ParaproductOp {
    pub fn new(symbol: GridFunction, axis: usize, flavor: Flavor) -> Result<Self> {
        symbol.grid().check_axis(axis)?;
        Ok(Self { axis, flavor, symbol })
    }

    pub fn grid(&self) -> &MultiGrid {
        self.symbol.grid()
    }

    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        paraproduct(&self.symbol, f, self.axis, self.flavor)
    }
}
