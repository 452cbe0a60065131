//! Sparse rank-structured operators built from per-axis atoms.
//!
//! Every model operator in this crate is a finite sum of terms
//! `c · ⟨f, φ_1 ⊗ … ⊗ φ_r⟩ ψ_1 ⊗ … ⊗ ψ_r` over its active axes, where each
//! `φ`, `ψ` is either a Haar function `h_K` or an averaging atom `1_K / |K|`.
//! Application analyses `f` once into both atom families along the active
//! axes, scatters the sparse terms, and synthesizes back.

use crate::grid::GridFunction;
use crate::kernels;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Atom {
    /// `h_K` for heap index `K` (slot 0 would be the constant function).
    Haar(usize),
    /// `1_K / |K|` for heap index `K`.
    Avg(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct AtomTerm {
    pub coef: f64,
    pub input: Vec<Atom>,
    pub output: Vec<Atom>,
}

fn slot(atom: Atom, n: usize) -> usize {
    match atom {
        Atom::Haar(k) => k,
        Atom::Avg(h) => n + h,
    }
}

fn strides_of(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for a in (0..dims.len().saturating_sub(1)).rev() {
        s[a] = s[a + 1] * dims[a + 1];
    }
    s
}

/// Applies a sum of atom terms acting on the sorted `axes` of `f`'s grid.
pub(crate) fn apply(f: &GridFunction, axes: &[usize], terms: &[AtomTerm]) -> GridFunction {
    let grid = f.grid();
    let dims = grid.dims();
    let mut adims = dims.clone();
    let mut analysed = f.data().to_vec();
    let mut scratch = Vec::new();
    for &a in axes {
        let n = dims[a];
        analysed = kernels::map_axis(&analysed, &adims, a, 3 * n, |x, o| {
            kernels::haar_forward(x, &mut o[..n], &mut scratch);
            kernels::pyramid_mean(x, &mut o[n..]);
        });
        adims[a] = 3 * n;
    }
    let strides = strides_of(&adims);
    let rest: Vec<usize> = grid.complement(axes);
    let mut rest_offsets = vec![0usize];
    for &r in &rest {
        let stride = strides[r];
        rest_offsets = rest_offsets
            .iter()
            .flat_map(|&o| (0..dims[r]).map(move |i| o + i * stride))
            .collect();
    }
    let mut synth = vec![0.0; analysed.len()];
    for term in terms {
        let base = |atoms: &[Atom]| -> usize {
            atoms.iter().zip(axes).map(|(&at, &a)| slot(at, dims[a]) * strides[a]).sum()
        };
        let (bi, bo) = (base(&term.input), base(&term.output));
        for &off in &rest_offsets {
            synth[bo + off] += term.coef * analysed[bi + off];
        }
    }
    let mut sdims = adims;
    for &a in axes {
        let n = dims[a];
        synth = kernels::map_axis(&synth, &sdims, a, n, |x, o| {
            kernels::haar_inverse(&x[..n], o);
            let mut avg = vec![0.0; n];
            kernels::spread_atoms(&x[n..], &mut avg);
            for (v, w) in o.iter_mut().zip(avg) {
                *v += w;
            }
        });
        sdims[a] = n;
    }
    GridFunction::from_parts(grid.clone(), synth)
}

pub(crate) fn adjoint(terms: &[AtomTerm]) -> Vec<AtomTerm> {
    terms
        .iter()
        .map(|t| AtomTerm { coef: t.coef, input: t.output.clone(), output: t.input.clone() })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{inner_product, MultiGrid};

    #[test]
    fn average_atom_round_trip() {
        let grid = MultiGrid::new(vec![2, 1]).unwrap();
        let f = GridFunction::from_fn(&grid, |i| (3 * i[0] + i[1]) as f64).unwrap();
        let terms = vec![AtomTerm { coef: 1.0, input: vec![Atom::Avg(2)], output: vec![Atom::Avg(3)] }];
        let out = apply(&f, &[0], &terms);
        assert_eq!(out.data(), &[0.0, 0.0, 0.0, 0.0, 3.0, 5.0, 3.0, 5.0]);
        let g = GridFunction::from_fn(&grid, |i| (i[0] as f64 - 1.0) * (i[1] as f64 + 0.5)).unwrap();
        let lhs = inner_product(&out, &g).unwrap();
        let rhs = inner_product(&f, &apply(&g, &[0], &adjoint(&terms))).unwrap();
        assert!((lhs - rhs).abs() < 1e-14);
    }
}
