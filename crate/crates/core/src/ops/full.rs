use serde::{Deserialize, Serialize};

use crate::bmo::{product_bmo_norm, TestFamily};
use crate::error::{Error, Result};
use crate::grid::{GridFunction, MultiGrid};
use crate::haar::{self, ParamSubset};
use crate::weights::Weight;

use super::atoms::{self, Atom, AtomTerm};

/// Which factors of the full paraproduct are taken in adjoint form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FullFlavor {
    /// `Σ a_K ⟨f, h_K⟩ 1_{K_1}/|K_1| ⊗ 1_{K_2}/|K_2|`.
    None,
    /// Adjoint in both parameters.
    Full,
    /// Adjoint in the first parameter of the pair.
    Partial1,
    /// Adjoint in the second parameter of the pair.
    Partial2,
}

impl FullFlavor {
    pub const ALL: [FullFlavor; 4] = [FullFlavor::None, FullFlavor::Full, FullFlavor::Partial1, FullFlavor::Partial2];

    fn adjoint_on(self, slot: usize) -> bool {
        match self {
            FullFlavor::None => false,
            FullFlavor::Full => true,
            FullFlavor::Partial1 => slot == 0,
            FullFlavor::Partial2 => slot == 1,
        }
    }
}

/// Bi-parameter paraproduct driven by a symbol with product BMO norm at most 1.
#[derive(Debug, Clone, PartialEq)]
pub struct FullParaSpec {
    grid: MultiGrid,
    pair: [usize; 2],
    flavor: FullFlavor,
    symbol: GridFunction,
    terms: Vec<AtomTerm>,
}

impl FullParaSpec {
    /// `symbol` lives on the pair's sub-grid; it is rescaled when its product
    /// BMO norm exceeds 1.
    pub fn new(grid: &MultiGrid, pair: [usize; 2], symbol: GridFunction, flavor: FullFlavor) -> Result<Self> {
        if pair[0] >= pair[1] {
            return Err(Error::InvalidOperator("full paraproduct pair must be two ascending axes".into()));
        }
        let sub = grid.sub_grid(&pair)?;
        if symbol.grid() != &sub {
            return Err(Error::GridMismatch("symbol does not live on the pair".into()));
        }
        let norm = product_bmo_norm(&symbol, &Weight::unit(&sub), &ParamSubset::all(&sub), TestFamily::Rectangles)?;
        let symbol = if norm > 1.0 { symbol.scaled(1.0 / norm) } else { symbol };
        let coeffs = haar::forward_axes(symbol.data(), &sub.dims(), &[0, 1]);
        let n1 = sub.axis_len(1);
        let mut terms = Vec::new();
        for k1 in 1..sub.axis_len(0) {
            for k2 in 1..n1 {
                let c = coeffs[k1 * n1 + k2];
                if c == 0.0 {
                    continue;
                }
                let (mut input, mut output) = (Vec::new(), Vec::new());
                for (slot, k) in [k1, k2].into_iter().enumerate() {
                    if flavor.adjoint_on(slot) {
                        input.push(Atom::Avg(k));
                        output.push(Atom::Haar(k));
                    } else {
                        input.push(Atom::Haar(k));
                        output.push(Atom::Avg(k));
                    }
                }
                terms.push(AtomTerm { coef: c, input, output });
            }
        }
        Ok(Self { grid: grid.clone(), pair, flavor, symbol, terms })
    }

    pub fn grid(&self) -> &MultiGrid {
        &self.grid
    }

    pub fn pair(&self) -> [usize; 2] {
        self.pair
    }

    pub fn flavor(&self) -> FullFlavor {
        self.flavor
    }

    /// The normalized symbol.
    pub fn symbol(&self) -> &GridFunction {
        &self.symbol
    }

    pub fn with_flavor(&self, flavor: FullFlavor) -> Self {
        Self::new(&self.grid, self.pair, self.symbol.clone(), flavor).expect("already validated")
    }

    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        if f.grid() != &self.grid {
            return Err(Error::GridMismatch("full paraproduct applied on a different grid".into()));
        }
        Ok(atoms::apply(f, &self.pair, &self.terms))
    }
}
