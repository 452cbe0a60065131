//! Weighted BMO functionals: product BMO in square-sum form, little bmo in
//! oscillation form, `BMO^v` through slices, and little product BMO.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{self, GridFunction, MultiGrid};
use crate::haar::{self, ParamSubset};
use crate::kernels;
use crate::weights::Weight;

/// Disjoint nonempty blocks covering every axis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    pub fn new(blocks: Vec<Vec<usize>>, m: usize) -> Result<Self> {
        let mut seen = vec![false; m];
        for block in &blocks {
            if block.is_empty() {
                return Err(Error::InvalidPartition("empty block".into()));
            }
            for &a in block {
                if a >= m {
                    return Err(Error::AxisOutOfRange { axis: a, m });
                }
                if std::mem::replace(&mut seen[a], true) {
                    return Err(Error::InvalidPartition(format!("axis {a} in two blocks")));
                }
            }
        }
        if let Some(a) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPartition(format!("axis {a} not covered")));
        }
        Ok(Self { blocks })
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Every choice of one axis per block, in lexicographic order.
    pub fn selections(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new()];
        for block in &self.blocks {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    block.iter().map(move |&a| {
                        let mut v = prefix.clone();
                        v.push(a);
                        v
                    })
                })
                .collect();
        }
        out
    }
}

/// Test sets for the product BMO supremum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFamily {
    Rectangles,
    /// Rectangles plus unions of up to the given number of pairwise
    /// non-nested dyadic rectangles.
    RectanglesPlusUnions(usize),
}

impl TestFamily {
    pub const DEFAULT_UNION_PIECES: usize = 3;

    pub fn with_unions() -> Self {
        TestFamily::RectanglesPlusUnions(Self::DEFAULT_UNION_PIECES)
    }
}

fn check_pair(b: &GridFunction, nu: &Weight) -> Result<()> {
    if b.grid() != nu.grid() {
        return Err(Error::GridMismatch("symbol and weight grids differ".into()));
    }
    Ok(())
}

/// Square-sum tables along `axes` (sorted): `c_R = |⟨b, h_R⟩_v|² / ⟨ν⟩_{R,v}`
/// for fully cancellative `R`, still in packed order; also returns the
/// heap-indexed pyramid of `ν` along the same axes.
fn carleson_coefficients(b: &GridFunction, nu: &Weight, axes: &[usize]) -> (Vec<f64>, Vec<usize>, Vec<f64>) {
    let dims = b.grid().dims();
    let coeffs = haar::forward_axes(b.data(), &dims, axes);
    let (pdims, nu_pyr) = kernels::pyramid_axes(nu.values().data(), &dims, axes);
    let m = dims.len();
    let mut pstrides = vec![1usize; m];
    for a in (0..m - 1).rev() {
        pstrides[a] = pstrides[a + 1] * pdims[a + 1];
    }
    let mut c = vec![0.0; coeffs.len()];
    kernels::for_each_heap_entry(&dims, axes, |flat, idx| {
        let pflat: usize = idx.iter().zip(&pstrides).map(|(i, s)| i * s).sum();
        c[flat] = coeffs[flat] * coeffs[flat] / nu_pyr[pflat];
    });
    (c, pdims, nu_pyr)
}

/// Rectangle-family supremum along `axes`, jointly over every finest-cell
/// slice of the other axes.
fn rectangle_sup(b: &GridFunction, nu: &Weight, axes: &[usize]) -> f64 {
    let dims = b.grid().dims();
    let (c, pdims, nu_pyr) = carleson_coefficients(b, nu, axes);
    let mut d = dims.clone();
    let mut sums = c;
    for &a in axes {
        sums = kernels::map_axis(&sums, &d, a, 2 * d[a], kernels::subtree_sum);
        d[a] *= 2;
    }
    debug_assert_eq!(d, pdims);
    let mut best: f64 = 0.0;
    kernels::for_each_heap_entry(&pdims, axes, |flat, idx| {
        let measure: f64 = axes.iter().map(|&a| 0.5f64.powi(kernels::heap_level(idx[a]) as i32)).product();
        best = best.max(sums[flat] / (nu_pyr[flat] * measure));
    });
    best.sqrt()
}

/// All dyadic rectangles of a grid as per-axis heap indices.
fn all_rectangles(grid: &MultiGrid) -> Vec<Vec<usize>> {
    let pdims: Vec<usize> = grid.dims().iter().map(|d| 2 * d).collect();
    let all: Vec<usize> = (0..grid.m()).collect();
    let mut out = Vec::new();
    kernels::for_each_heap_entry(&pdims, &all, |_, idx| out.push(idx.to_vec()));
    out
}

fn heap_contains(outer: &[usize], inner: &[usize]) -> bool {
    outer.iter().zip(inner).all(|(&o, &i)| {
        let (lo, li) = (kernels::heap_level(o), kernels::heap_level(i));
        li >= lo && i >> (li - lo) == o
    })
}

/// Unions of 2..=pieces pairwise non-nested rectangles.
fn union_sup(b: &GridFunction, nu: &Weight, pieces: usize) -> f64 {
    let grid = b.grid();
    let dims = grid.dims();
    let all: Vec<usize> = (0..grid.m()).collect();
    let (c, _, _) = carleson_coefficients(b, nu, &all);
    let cancellative: Vec<(Vec<usize>, f64)> = {
        let mut v = Vec::new();
        kernels::for_each_heap_entry(&dims, &all, |flat, idx| v.push((idx.to_vec(), c[flat])));
        v
    };
    let rects = all_rectangles(grid);
    let vol = grid.cell_volume();
    let mut best: f64 = 0.0;
    let mut chosen: Vec<usize> = Vec::new();
    let mut evaluate = |chosen: &[usize]| {
        let mut mask = vec![0.0; grid.len()];
        for &r in chosen {
            let bx: Vec<(usize, usize)> = rects[r]
                .iter()
                .enumerate()
                .map(|(a, &h)| crate::grid::DyadicInterval::from_heap(a, h).cell_range(grid.level(a)))
                .collect();
            kernels::for_each_in_box(&dims, &bx, |flat| mask[flat] = 1.0);
        }
        let nu_omega: f64 = mask.iter().zip(nu.values().data()).map(|(m, w)| m * w).sum::<f64>() * vol;
        let (pdims, counts) = {
            let mut d = dims.clone();
            let mut t = mask;
            for a in 0..grid.m() {
                t = kernels::map_axis(&t, &d, a, 2 * d[a], kernels::pyramid_sum);
                d[a] *= 2;
            }
            (d, t)
        };
        let mut pstrides = vec![1usize; pdims.len()];
        for a in (0..pdims.len() - 1).rev() {
            pstrides[a] = pstrides[a + 1] * pdims[a + 1];
        }
        let mut total = 0.0;
        for (idx, value) in &cancellative {
            let pflat: usize = idx.iter().zip(&pstrides).map(|(i, s)| i * s).sum();
            let cells: usize = idx
                .iter()
                .enumerate()
                .map(|(a, &h)| 1usize << (grid.level(a) - kernels::heap_level(h)))
                .product();
            if counts[pflat] as usize == cells {
                total += value;
            }
        }
        total / nu_omega
    };
    fn recurse<F: FnMut(&[usize]) -> f64>(
        rects: &[Vec<usize>],
        start: usize,
        pieces: usize,
        chosen: &mut Vec<usize>,
        best: &mut f64,
        eval: &mut F,
    ) {
        if chosen.len() >= 2 {
            *best = best.max(eval(chosen));
        }
        if chosen.len() == pieces {
            return;
        }
        for r in start..rects.len() {
            if chosen.iter().any(|&q| heap_contains(&rects[q], &rects[r]) || heap_contains(&rects[r], &rects[q])) {
                continue;
            }
            chosen.push(r);
            recurse(rects, r + 1, pieces, chosen, best, eval);
            chosen.pop();
        }
    }
    recurse(&rects, 0, pieces, &mut chosen, &mut best, &mut evaluate);
    best.sqrt()
}

/// Weighted product BMO norm over the chosen test family. `v` must list every
/// axis of the grid; restrict to fewer axes by slicing first or use
/// [`bmo_v_norm`].
pub fn product_bmo_norm(b: &GridFunction, nu: &Weight, v: &ParamSubset, family: TestFamily) -> Result<f64> {
    check_pair(b, nu)?;
    v.check_in(b.grid())?;
    if v.len() != b.grid().m() {
        return Err(Error::GridMismatch("product BMO needs every axis active; slice first".into()));
    }
    let axes = v.sorted();
    let rect = rectangle_sup(b, nu, &axes);
    match family {
        TestFamily::Rectangles => Ok(rect),
        TestFamily::RectanglesPlusUnions(0) => Err(Error::EmptyTestFamily),
        TestFamily::RectanglesPlusUnions(1) => Ok(rect),
        TestFamily::RectanglesPlusUnions(u) => Ok(rect.max(union_sup(b, nu, u))),
    }
}

/// `sup_R ν(R)^{-1} ∫_R |b - ⟨b⟩_R|` over every dyadic rectangle.
pub fn little_bmo_norm(b: &GridFunction, nu: &Weight) -> Result<f64> {
    check_pair(b, nu)?;
    let grid = b.grid();
    let dims = grid.dims();
    let all: Vec<usize> = (0..grid.m()).collect();
    let (pdims, means) = kernels::pyramid_axes(b.data(), &dims, &all);
    let (_, nu_means) = kernels::pyramid_axes(nu.values().data(), &dims, &all);
    let mut best: f64 = 0.0;
    kernels::for_each_heap_entry(&pdims, &all, |flat, idx| {
        if idx.iter().enumerate().all(|(a, &h)| kernels::heap_level(h) == grid.level(a)) {
            return;
        }
        let bx: Vec<(usize, usize)> = idx
            .iter()
            .enumerate()
            .map(|(a, &h)| grid::DyadicInterval::from_heap(a, h).cell_range(grid.level(a)))
            .collect();
        let mean = means[flat];
        let mut osc = 0.0;
        kernels::for_each_in_box(&dims, &bx, |c| osc += (b.data()[c] - mean).abs());
        let cells: usize = bx.iter().map(|(lo, hi)| hi - lo).product();
        best = best.max(osc / (cells as f64 * nu_means[flat]));
    });
    Ok(best)
}

/// `BMO^v(ν)`: supremum over every finest-cell slice of the complementary
/// axes of the rectangle-family product BMO norm on `v`.
pub fn bmo_v_norm(b: &GridFunction, nu: &Weight, v: &ParamSubset) -> Result<f64> {
    check_pair(b, nu)?;
    v.check_in(b.grid())?;
    Ok(rectangle_sup(b, nu, &v.sorted()))
}

/// Maximum of [`bmo_v_norm`] over every one-axis-per-block selection.
pub fn little_product_bmo_norm(b: &GridFunction, nu: &Weight, partition: &Partition) -> Result<f64> {
    check_pair(b, nu)?;
    let m = b.grid().m();
    Partition::new(partition.blocks().to_vec(), m)?;
    partition.selections().into_iter().try_fold(0.0f64, |acc, sel| {
        Ok(acc.max(bmo_v_norm(b, nu, &ParamSubset::new(sel)?)?))
    })
}

/// Dual-form ratio `|⟨b, f⟩| / ‖S^u f‖_{L¹(ν)}` used to probe the embedding
/// of `BMO^v(ν)` into the dual of the square-function space on `u ⊇ v`.
pub fn embedding_ratio(b: &GridFunction, nu: &Weight, u: &ParamSubset, f: &GridFunction) -> Result<f64> {
    let pairing = grid::inner_product(b, f)?;
    let (_, norm) = crate::ops::square_function(f, u, nu, 1.0)?;
    if norm == 0.0 {
        return Err(Error::TrivialTestFunction);
    }
    Ok(pairing.abs() / norm)
}
