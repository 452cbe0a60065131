use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DyadicInterval, GridFunction, MultiGrid};
use crate::haar::ParamSubset;
use crate::kernels;

use super::atoms::{self, Atom, AtomTerm};

/// Relative slack allowed when checking the size bound.
pub const ADMISSIBILITY_SLACK: f64 = 1e-12;

/// One coefficient `a_{K,I,J}`; indices are packed per active axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftCoeff {
    pub k: Vec<usize>,
    pub i: Vec<usize>,
    pub j: Vec<usize>,
    pub value: f64,
}

/// `|I|^{1/2} |J|^{1/2} / |K|` for packed indices, exact in binary.
pub fn size_bound(k: &[usize], i: &[usize], j: &[usize]) -> f64 {
    let mut e: i32 = 0;
    for ((&k, &i), &j) in k.iter().zip(i).zip(j) {
        e += 2 * kernels::heap_level(k) as i32 - kernels::heap_level(i) as i32 - kernels::heap_level(j) as i32;
    }
    2f64.powf(e as f64 / 2.0)
}

/// Validated multi-parameter dyadic shift of fixed complexity.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftSpec {
    grid: MultiGrid,
    axes: Vec<usize>,
    complexity: Vec<(usize, usize)>,
    coeffs: Vec<ShiftCoeff>,
    terms: Vec<AtomTerm>,
}

impl ShiftSpec {
    pub fn new(grid: &MultiGrid, axes: &ParamSubset, complexity: Vec<(usize, usize)>, coeffs: Vec<ShiftCoeff>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::EmptySubset);
        }
        axes.check_in(grid)?;
        let sorted = axes.sorted();
        if sorted != axes.axes() {
            return Err(Error::InvalidOperator("shift axes must be listed in ascending order".into()));
        }
        if complexity.len() != sorted.len() {
            return Err(Error::InvalidOperator("one complexity pair per axis".into()));
        }
        for (&a, &(k, l)) in sorted.iter().zip(&complexity) {
            if k.max(l) >= grid.level(a) {
                return Err(Error::InvalidOperator(format!("complexity ({k},{l}) too deep for axis {a}")));
            }
        }
        for c in &coeffs {
            check_coeff(grid, &sorted, &complexity, c)?;
        }
        let terms = coeffs
            .iter()
            .filter(|c| c.value != 0.0)
            .map(|c| AtomTerm {
                coef: c.value,
                input: c.i.iter().map(|&h| Atom::Haar(h)).collect(),
                output: c.j.iter().map(|&h| Atom::Haar(h)).collect(),
            })
            .collect();
        Ok(Self { grid: grid.clone(), axes: sorted, complexity, coeffs, terms })
    }

    /// `a_{K,K,K} = 1` for every cancellative `K`: removes the top components.
    pub fn haar_multiplier(grid: &MultiGrid, axes: &ParamSubset) -> Result<Self> {
        let sorted = axes.sorted();
        let mut keys = vec![Vec::new()];
        for &a in &sorted {
            keys = keys
                .into_iter()
                .flat_map(|p: Vec<usize>| {
                    (1..grid.axis_len(a)).map(move |h| {
                        let mut v = p.clone();
                        v.push(h);
                        v
                    })
                })
                .collect();
        }
        let coeffs = keys.into_iter().map(|k| ShiftCoeff { i: k.clone(), j: k.clone(), k, value: 1.0 }).collect();
        Self::new(grid, &ParamSubset::new(sorted.clone())?, vec![(0, 0); sorted.len()], coeffs)
    }

    pub fn zero(grid: &MultiGrid, axes: &ParamSubset) -> Result<Self> {
        Self::new(grid, axes, vec![(0, 0); axes.len()], Vec::new())
    }

    pub fn grid(&self) -> &MultiGrid {
        &self.grid
    }

    pub fn axes(&self) -> &[usize] {
        &self.axes
    }

    pub fn complexity(&self) -> &[(usize, usize)] {
        &self.complexity
    }

    pub fn coeffs(&self) -> &[ShiftCoeff] {
        &self.coeffs
    }

    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        if f.grid() != &self.grid {
            return Err(Error::GridMismatch("shift applied on a different grid".into()));
        }
        Ok(atoms::apply(f, &self.axes, &self.terms))
    }

    /// `𝒮^*`, the shift with the roles of `I` and `J` exchanged.
    pub fn adjoint(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| ShiftCoeff { k: c.k.clone(), i: c.j.clone(), j: c.i.clone(), value: c.value })
            .collect();
        let complexity = self.complexity.iter().map(|&(k, l)| (l, k)).collect();
        Self {
            grid: self.grid.clone(),
            axes: self.axes.clone(),
            complexity,
            coeffs,
            terms: atoms::adjoint(&self.terms),
        }
    }
}

fn check_coeff(grid: &MultiGrid, axes: &[usize], complexity: &[(usize, usize)], c: &ShiftCoeff) -> Result<()> {
    let r = axes.len();
    if c.k.len() != r || c.i.len() != r || c.j.len() != r {
        return Err(Error::Inadmissible("index arity".into()));
    }
    if !c.value.is_finite() {
        return Err(Error::Inadmissible("non-finite coefficient".into()));
    }
    for t in 0..r {
        let a = axes[t];
        let n = grid.level(a);
        let (k, i, j) = (c.k[t], c.i[t], c.j[t]);
        if [k, i, j].iter().any(|&h| h == 0 || h >= 1 << n) {
            return Err(Error::Inadmissible(format!("non-cancellative index on axis {a}")));
        }
        let (ki, ii, ji) = (DyadicInterval::from_heap(a, k), DyadicInterval::from_heap(a, i), DyadicInterval::from_heap(a, j));
        let (kk, ll) = complexity[t];
        if ii.ancestor(kk) != Some(ki) || ji.ancestor(ll) != Some(ki) {
            return Err(Error::Inadmissible(format!("I^(k) = K = J^(l) fails on axis {a}")));
        }
    }
    let bound = size_bound(&c.k, &c.i, &c.j);
    if c.value.abs() > bound * (1.0 + ADMISSIBILITY_SLACK) {
        return Err(Error::Inadmissible(format!("|a| = {} exceeds {}", c.value.abs(), bound)));
    }
    Ok(())
}
