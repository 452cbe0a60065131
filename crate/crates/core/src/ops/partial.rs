use serde::{Deserialize, Serialize};

use crate::bmo::little_bmo_norm;
use crate::error::{Error, Result};
use crate::grid::{DyadicInterval, GridFunction, MultiGrid};
use crate::haar;
use crate::weights::Weight;

use super::atoms::{self, Atom, AtomTerm};
use super::shift::{size_bound, ADMISSIBILITY_SLACK};

/// Coefficient sequence `K_t ↦ ⟨a_{K_s,I_s,J_s}, h_{K_t}⟩` for one shift triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialEntry {
    pub k: usize,
    pub i: usize,
    pub j: usize,
    /// `(packed K_t, coefficient)` pairs.
    pub seq: Vec<(usize, f64)>,
}

/// Partial paraproduct: shift structure on axis `s`, paraproduct structure on axis `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialParaSpec {
    grid: MultiGrid,
    s: usize,
    t: usize,
    complexity: (usize, usize),
    adjoint: bool,
    entries: Vec<PartialEntry>,
    terms: Vec<AtomTerm>,
}

/// Dyadic oscillation norm of the function on axis `t` with the given Haar coefficients.
pub fn sequence_bmo(n_t: usize, seq: &[(usize, f64)]) -> Result<f64> {
    let line_grid = MultiGrid::new(vec![n_t])?;
    let mut coeffs = vec![0.0; 1 << n_t];
    for &(h, c) in seq {
        if h == 0 || h >= coeffs.len() {
            return Err(Error::Inadmissible(format!("paraproduct index {h} is not cancellative")));
        }
        coeffs[h] += c;
    }
    let line = haar::inverse_axes(&coeffs, &[1 << n_t], &[0]);
    little_bmo_norm(&GridFunction::new(line_grid.clone(), line)?, &Weight::unit(&line_grid))
}

impl PartialParaSpec {
    pub fn new(
        grid: &MultiGrid,
        s: usize,
        t: usize,
        complexity: (usize, usize),
        entries: Vec<PartialEntry>,
        adjoint: bool,
    ) -> Result<Self> {
        grid.check_axis(s)?;
        grid.check_axis(t)?;
        if s == t {
            return Err(Error::RepeatedAxis(s));
        }
        let (ns, nt) = (grid.level(s), grid.level(t));
        if complexity.0.max(complexity.1) >= ns {
            return Err(Error::InvalidOperator(format!("complexity {complexity:?} too deep for axis {s}")));
        }
        for e in &entries {
            for &h in &[e.k, e.i, e.j] {
                if h == 0 || h >= 1 << ns {
                    return Err(Error::Inadmissible(format!("non-cancellative index on axis {s}")));
                }
            }
            let (k, i, j) = (DyadicInterval::from_heap(s, e.k), DyadicInterval::from_heap(s, e.i), DyadicInterval::from_heap(s, e.j));
            if i.ancestor(complexity.0) != Some(k) || j.ancestor(complexity.1) != Some(k) {
                return Err(Error::Inadmissible(format!("I^(k) = K = J^(l) fails on axis {s}")));
            }
            let norm = sequence_bmo(nt, &e.seq)?;
            let bound = size_bound(&[e.k], &[e.i], &[e.j]);
            if norm > bound * (1.0 + ADMISSIBILITY_SLACK) {
                return Err(Error::Inadmissible(format!("sequence BMO {norm} exceeds {bound}")));
            }
        }
        let mut terms = Vec::new();
        for e in &entries {
            for &(kt, c) in &e.seq {
                if c == 0.0 {
                    continue;
                }
                let (mut input, mut output) = (vec![Atom::Haar(e.i), Atom::Haar(kt)], vec![Atom::Haar(e.j), Atom::Avg(kt)]);
                if s > t {
                    input.reverse();
                    output.reverse();
                }
                terms.push(AtomTerm { coef: c, input, output });
            }
        }
        if adjoint {
            terms = atoms::adjoint(&terms);
        }
        Ok(Self { grid: grid.clone(), s, t, complexity, adjoint, entries, terms })
    }

    pub fn grid(&self) -> &MultiGrid {
        &self.grid
    }

    /// `(s, t)`.
    pub fn pair(&self) -> (usize, usize) {
        (self.s, self.t)
    }

    /// Active axes, ascending.
    pub fn axes(&self) -> Vec<usize> {
        let mut v = vec![self.s, self.t];
        v.sort_unstable();
        v
    }

    pub fn complexity(&self) -> (usize, usize) {
        self.complexity
    }

    pub fn is_adjoint(&self) -> bool {
        self.adjoint
    }

    pub fn entries(&self) -> &[PartialEntry] {
        &self.entries
    }

    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        if f.grid() != &self.grid {
            return Err(Error::GridMismatch("partial paraproduct applied on a different grid".into()));
        }
        Ok(atoms::apply(f, &self.axes(), &self.terms))
    }

    /// The adjoint operator.
    pub fn adjoint(&self) -> Self {
        Self::new(&self.grid, self.s, self.t, self.complexity, self.entries.clone(), !self.adjoint)
            .expect("already validated")
    }
}
