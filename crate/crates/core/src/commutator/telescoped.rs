//! The fully illegal group of a shift commutator, re-expressed through the
//! telescoping of average differences.
//!
//! With every axis carrying the non-cancellative flavor, the side patterns
//! of the commutator collapse to
//! `Σ_{I,J} Π_i a^i_{K_i,I_i,J_i} · (-1)^{k-1} Π_i (δ_{J_i} - δ_{I_i}) ⟨b⟩ · ⟨f, h_I⟩ h_J`,
//! where `δ_{J_i} - δ_{I_i}` swaps the block-`i` side of the averaging
//! rectangle. Each difference is expanded block by block into martingale
//! differences along the ancestor chains of `I_i` and `J_i`, and every leaf
//! is checked against the general term shape.

use crate::error::{Error, Result};
use crate::grid::{DyadicInterval, DyadicRectangle, GridFunction};
use crate::haar::{self, HaarSign, Side, TelescopeEvaluator, TelescopeTerm};
use crate::ops::{ExpansionFlavor, Flavor, OperatorSpec, ShiftSpec};

use super::{group_value, CommutatorSpec};

#[derive(Debug, Clone)]
pub struct TelescopedGroup {
    pub value: GridFunction,
    /// `(I, J)` coefficient combinations visited.
    pub pairs: usize,
    /// Product terms, one telescoping term per block.
    pub leaves: usize,
}

/// The fully illegal group summed over side patterns, computed directly.
pub fn illegal_group(c: &CommutatorSpec, f: &GridFunction) -> Result<GridFunction> {
    group_value(c, f, &vec![ExpansionFlavor::Para(Flavor::A3); c.grid().m()])
}

struct Walk<'a> {
    shifts: Vec<&'a ShiftSpec>,
    /// Remaining axes before each level.
    remaining: Vec<Vec<usize>>,
    f_coeffs: Vec<f64>,
    strides: Vec<usize>,
    sign: HaarSign,
    out: Vec<f64>,
    pairs: usize,
    leaves: usize,
}

fn local_rect(local: &[usize], heaps: &[usize]) -> DyadicRectangle {
    DyadicRectangle::new(local.iter().zip(heaps).map(|(&a, &h)| DyadicInterval::from_heap(a, h)).collect())
        .expect("distinct axes")
}

fn check_shape<V>(
    t: &TelescopeTerm<V>,
    block: &[usize],
    complexity: &[(usize, usize)],
    (i, j, k): (&DyadicRectangle, &DyadicRectangle, &DyadicRectangle),
) -> Result<()> {
    let slot = block
        .iter()
        .position(|&a| a == t.axis)
        .ok_or_else(|| Error::ShapeMismatch(format!("difference on axis {} outside its block", t.axis)))?;
    let (own, bound) = match t.side {
        Side::J => (j.intervals()[slot], complexity[slot].1),
        Side::I => (i.intervals()[slot], complexity[slot].0),
    };
    if t.step == 0 || t.step > bound {
        return Err(Error::ShapeMismatch(format!("step {} outside 1..={bound}", t.step)));
    }
    if own.ancestor(t.step) != Some(t.ancestor) || !k.intervals()[slot].contains(&t.ancestor) {
        return Err(Error::ShapeMismatch("difference not on the ancestor chain".into()));
    }
    let expected: Vec<DyadicInterval> = (0..block.len())
        .map(|s| match s.cmp(&slot) {
            std::cmp::Ordering::Less => i.intervals()[s],
            std::cmp::Ordering::Equal => own,
            std::cmp::Ordering::Greater => j.intervals()[s],
        })
        .collect();
    if t.rectangle.intervals() != expected.as_slice() {
        return Err(Error::ShapeMismatch("averaging rectangle does not follow the mixed pattern".into()));
    }
    Ok(())
}

impl Walk<'_> {
    fn run(&mut self, level: usize, phi: &GridFunction, prefix_i: &[usize], prefix_j: &[usize], weight: f64) -> Result<()> {
        let shift = self.shifts[level];
        let remaining = &self.remaining[level];
        let local: Vec<usize> = shift
            .axes()
            .iter()
            .map(|a| remaining.iter().position(|r| r == a).expect("axis remains"))
            .collect();
        let last = level + 1 == self.shifts.len();
        let eval = TelescopeEvaluator::with_sign(phi, &local, self.sign)?;
        for coeff in shift.coeffs().iter().filter(|c| c.value != 0.0) {
            let (i, j, k) = (local_rect(&local, &coeff.i), local_rect(&local, &coeff.j), local_rect(&local, &coeff.k));
            let mut heaps_i = prefix_i.to_vec();
            let mut heaps_j = prefix_j.to_vec();
            for (t, &a) in shift.axes().iter().enumerate() {
                heaps_i[a] = coeff.i[t];
                heaps_j[a] = coeff.j[t];
            }
            let w = weight * coeff.value;
            if last {
                self.pairs += 1;
                let flat_i: usize = heaps_i.iter().zip(&self.strides).map(|(h, s)| h * s).sum();
                let flat_j: usize = heaps_j.iter().zip(&self.strides).map(|(h, s)| h * s).sum();
                for t in eval.terms(&i, &j, &k)? {
                    check_shape(&t, &local, shift.complexity(), (&i, &j, &k))?;
                    self.leaves += 1;
                    self.out[flat_j] += w * t.value * self.f_coeffs[flat_i];
                }
            } else {
                for t in eval.partial_terms(&i, &j, &k)? {
                    check_shape(&t, &local, shift.complexity(), (&i, &j, &k))?;
                    self.run(level + 1, &t.value, &heaps_i, &heaps_j, w)?;
                }
            }
        }
        Ok(())
    }
}

/// The fully illegal group of a shift-only commutator through telescoping;
/// fails with [`Error::ShapeMismatch`] if a leaf leaves the general term shape.
pub fn telescoped_illegal_group(c: &CommutatorSpec, f: &GridFunction, sign: HaarSign) -> Result<TelescopedGroup> {
    if f.grid() != c.grid() {
        return Err(Error::GridMismatch("input lives on a different grid".into()));
    }
    let shifts: Vec<&ShiftSpec> = c
        .operators()
        .iter()
        .map(|op| match op {
            OperatorSpec::Shift(s) => Ok(s),
            other => Err(Error::InvalidOperator(format!("telescoped path needs shifts, found {}", other.kind()))),
        })
        .collect::<Result<_>>()?;
    let grid = c.grid();
    let dims = grid.dims();
    let all: Vec<usize> = (0..grid.m()).collect();
    let mut remaining = Vec::new();
    let mut rest = all.clone();
    for s in &shifts {
        remaining.push(rest.clone());
        rest.retain(|a| !s.axes().contains(a));
    }
    let mut walk = Walk {
        shifts,
        remaining,
        f_coeffs: haar::forward_axes(f.data(), &dims, &all),
        strides: grid.strides(),
        sign,
        out: vec![0.0; grid.len()],
        pairs: 0,
        leaves: 0,
    };
    let zeros = vec![0usize; grid.m()];
    let outer = if c.k() % 2 == 1 { 1.0 } else { -1.0 };
    walk.run(0, c.symbol(), &zeros, &zeros, outer)?;
    let value = GridFunction::new(grid.clone(), haar::inverse_axes(&walk.out, &dims, &all))?;
    Ok(TelescopedGroup { value, pairs: walk.pairs, leaves: walk.leaves })
}
