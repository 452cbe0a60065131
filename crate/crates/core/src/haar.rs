//! Haar basis, multi-parameter Haar transform, martingale differences and
//! blocks, and the telescoping expansion of a difference of averages.
//!
//! Convention: `h_I = |I|^{-1/2} (1_{left half} - 1_{right half})`. Along a
//! transformed axis the packed slot `k = 0` holds the coefficient against the
//! constant function 1 and slot `k >= 1` holds the coefficient against `h_I`
//! with `I` at level `floor(log2 k)` and position `k - 2^level`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DyadicInterval, DyadicRectangle, GridFunction, MultiGrid};
use crate::kernels;

/// Ordered list of distinct axes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct ParamSubset(Vec<usize>);

impl TryFrom<Vec<usize>> for ParamSubset {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        ParamSubset::new(v)
    }
}

impl From<ParamSubset> for Vec<usize> {
    fn from(p: ParamSubset) -> Self {
        p.0
    }
}

impl ParamSubset {
    /// Nonempty, duplicate-free.
    pub fn new(axes: Vec<usize>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::EmptySubset);
        }
        Self::possibly_empty(axes)
    }

    pub fn possibly_empty(axes: Vec<usize>) -> Result<Self> {
        for (i, a) in axes.iter().enumerate() {
            if axes[..i].contains(a) {
                return Err(Error::RepeatedAxis(*a));
            }
        }
        Ok(Self(axes))
    }

    pub fn all(grid: &MultiGrid) -> Self {
        Self((0..grid.m()).collect())
    }

    pub fn axes(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, axis: usize) -> bool {
        self.0.contains(&axis)
    }

    pub fn check_in(&self, grid: &MultiGrid) -> Result<()> {
        self.0.iter().try_for_each(|&a| grid.check_axis(a))
    }

    pub(crate) fn sorted(&self) -> Vec<usize> {
        let mut v = self.0.clone();
        v.sort_unstable();
        v
    }
}

/// Coefficients of a function transformed along a subset of axes, with the
/// remaining axes left in cell space.
#[derive(Debug, Clone, PartialEq)]
pub struct HaarCoeffs {
    grid: MultiGrid,
    axes: Vec<usize>,
    data: Vec<f64>,
}

impl HaarCoeffs {
    pub fn new(grid: MultiGrid, axes: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let subset = ParamSubset::possibly_empty(axes)?;
        subset.check_in(&grid)?;
        if data.len() != grid.len() {
            return Err(Error::GridMismatch("coefficient count".into()));
        }
        Ok(Self { grid, axes: subset.sorted(), data })
    }

    pub fn grid(&self) -> &MultiGrid {
        &self.grid
    }

    /// Transformed axes, ascending.
    pub fn axes(&self) -> &[usize] {
        &self.axes
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Entry at per-axis indices (packed on transformed axes, cells elsewhere).
    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.grid.flat_index(idx)]
    }
}

pub(crate) fn forward_axes(data: &[f64], dims: &[usize], axes: &[usize]) -> Vec<f64> {
    let mut out = data.to_vec();
    let mut scratch = Vec::new();
    for &a in axes {
        out = kernels::map_axis(&out, dims, a, dims[a], |x, o| kernels::haar_forward(x, o, &mut scratch));
    }
    out
}

pub(crate) fn inverse_axes(data: &[f64], dims: &[usize], axes: &[usize]) -> Vec<f64> {
    let mut out = data.to_vec();
    for &a in axes {
        out = kernels::map_axis(&out, dims, a, dims[a], kernels::haar_inverse);
    }
    out
}

/// Orthonormal Haar analysis along each axis of `v`.
pub fn haar_transform(f: &GridFunction, v: &ParamSubset) -> Result<HaarCoeffs> {
    v.check_in(f.grid())?;
    let axes = v.sorted();
    let data = forward_axes(f.data(), &f.grid().dims(), &axes);
    Ok(HaarCoeffs { grid: f.grid().clone(), axes, data })
}

/// Inverse of [`haar_transform`].
pub fn inverse_transform(c: &HaarCoeffs) -> GridFunction {
    let data = inverse_axes(&c.data, &c.grid.dims(), &c.axes);
    GridFunction::from_parts(c.grid.clone(), data)
}

/// `h_R` on the axes of `R`, constant 1 on the other axes.
pub fn haar_function(grid: &MultiGrid, r: &DyadicRectangle) -> Result<GridFunction> {
    r.check_in(grid)?;
    for i in r.intervals() {
        if i.level >= grid.level(i.axis) {
            return Err(Error::NoChildren(i.axis));
        }
    }
    GridFunction::from_fn(grid, |idx| {
        r.intervals().iter().map(|i| i.haar_at(idx[i.axis], grid.level(i.axis))).product()
    })
}

fn check_cancellative(grid: &MultiGrid, r: &DyadicRectangle) -> Result<()> {
    r.check_in(grid)?;
    match r.intervals().iter().find(|i| i.level >= grid.level(i.axis)) {
        Some(i) => Err(Error::NoChildren(i.axis)),
        None => Ok(()),
    }
}

/// `Δ_R f = ⟨f, h_R⟩ ⊗ h_R`, iterated one axis at a time.
pub fn martingale_diff(f: &GridFunction, r: &DyadicRectangle) -> Result<GridFunction> {
    let grid = f.grid();
    check_cancellative(grid, r)?;
    let dims = grid.dims();
    let mut data = f.data().to_vec();
    for i in r.intervals() {
        let n = grid.level(i.axis);
        let (lo, hi) = i.cell_range(n);
        let mid = (lo + hi) / 2;
        let amp = (i.measure()).sqrt().recip();
        let width = (1usize << n) as f64;
        data = kernels::map_axis(&data, &dims, i.axis, dims[i.axis], |x, o| {
            let left: f64 = x[lo..mid].iter().sum();
            let right: f64 = x[mid..hi].iter().sum();
            let c = amp * (left - right) / width;
            for v in &mut o[lo..mid] {
                *v = c * amp;
            }
            for v in &mut o[mid..hi] {
                *v = -c * amp;
            }
        });
    }
    Ok(GridFunction::from_parts(grid.clone(), data))
}

/// `Δ_{K,k} f`: the sum of `Δ_I f` over every `I` with `I^{(k)} = K`.
pub fn martingale_block(f: &GridFunction, k_rect: &DyadicRectangle, offsets: &[usize]) -> Result<GridFunction> {
    let grid = f.grid();
    k_rect.check_in(grid)?;
    if offsets.len() != k_rect.intervals().len() {
        return Err(Error::GridMismatch("one offset per interval".into()));
    }
    for (i, &k) in k_rect.intervals().iter().zip(offsets) {
        if i.level + k >= grid.level(i.axis) {
            return Err(Error::OffsetOverflow(i.axis));
        }
    }
    let dims = grid.dims();
    let axes = k_rect.axes();
    let mut coeffs = forward_axes(f.data(), &dims, &axes);
    for (i, &k) in k_rect.intervals().iter().zip(offsets) {
        let first = i.descendants(k).next().map(|d| d.heap()).unwrap_or(0);
        let keep = first..first + (1usize << k);
        coeffs = kernels::map_axis(&coeffs, &dims, i.axis, dims[i.axis], |x, o| {
            for h in keep.clone() {
                o[h] = x[h];
            }
        });
    }
    Ok(GridFunction::from_parts(grid.clone(), inverse_axes(&coeffs, &dims, &axes)))
}

/// Which side of the difference a telescoping term comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    /// Term `+⟨Δ_{J^{(t)}} φ⟩` with `t = step`.
    J,
    /// Term `-⟨Δ_{I^{(s)}} φ⟩` with `s = step`.
    I,
}

/// One term of the telescoping expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct TelescopeTerm<V> {
    pub axis: usize,
    pub side: Side,
    pub step: usize,
    /// The interval `J^{(t)}` or `I^{(s)}` carrying the martingale difference.
    pub ancestor: DyadicInterval,
    /// Rectangle the difference is averaged over.
    pub rectangle: DyadicRectangle,
    /// Signed value.
    pub value: V,
}

/// Sign of the pointwise Haar evaluation used by the evaluator. `Flipped`
/// exists only as a mutation hook for the verification harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HaarSign {
    #[default]
    Standard,
    Flipped,
}

pub(crate) fn check_triple(i: &DyadicRectangle, j: &DyadicRectangle, k: &DyadicRectangle) -> Result<()> {
    if i.axes() != k.axes() || j.axes() != k.axes() {
        return Err(Error::GridMismatch("I, J, K must share their axes".into()));
    }
    for ((a, b), c) in i.intervals().iter().zip(j.intervals()).zip(k.intervals()) {
        if !c.contains(a) || !c.contains(b) {
            return Err(Error::NotCommonAncestor(c.axis));
        }
    }
    Ok(())
}

/// Precomputed tables for evaluating telescoping terms in constant time per
/// term. `block` lists the axes the rectangles live on; the values are
/// functions of the remaining axes (scalars when `block` covers the grid).
pub struct TelescopeEvaluator {
    grid: MultiGrid,
    block: Vec<usize>,
    rest: Vec<usize>,
    tables: Vec<(Vec<usize>, Vec<f64>)>,
    sign: HaarSign,
}

impl TelescopeEvaluator {
    pub fn new(phi: &GridFunction, block: &[usize]) -> Result<Self> {
        Self::with_sign(phi, block, HaarSign::Standard)
    }

    pub fn with_sign(phi: &GridFunction, block: &[usize], sign: HaarSign) -> Result<Self> {
        let grid = phi.grid().clone();
        let block = ParamSubset::new(block.to_vec())?;
        block.check_in(&grid)?;
        let block = block.sorted();
        let rest = grid.complement(&block);
        let dims = grid.dims();
        let mut scratch = Vec::new();
        let tables = block
            .iter()
            .map(|&a| {
                let mut d = dims.clone();
                let mut t = kernels::map_axis(phi.data(), &d, a, d[a], |x, o| {
                    kernels::haar_forward(x, o, &mut scratch)
                });
                for &b in block.iter().filter(|&&b| b != a) {
                    t = kernels::map_axis(&t, &d, b, 2 * d[b], kernels::pyramid_mean);
                    d[b] *= 2;
                }
                (d, t)
            })
            .collect();
        Ok(Self { grid, block, rest, tables, sign })
    }

    pub fn block(&self) -> &[usize] {
        &self.block
    }

    /// Grid of the remaining axes, `None` when the block covers every axis.
    pub fn rest_grid(&self) -> Option<MultiGrid> {
        (!self.rest.is_empty()).then(|| self.grid.sub_grid(&self.rest).expect("valid axes"))
    }

    /// Value of `⟨Δ_P φ⟩` averaged over the block rectangle `avg`, where the
    /// interval of `avg` on `P`'s axis lies strictly inside `P`.
    fn term_value(&self, p: &DyadicInterval, avg: &DyadicRectangle) -> Vec<f64> {
        let slot = self.block.iter().position(|&a| a == p.axis).expect("axis in block");
        let (dims, table) = &self.tables[slot];
        let r = avg.get(p.axis).expect("axis in rectangle");
        let child = r.ancestor(r.level - p.level - 1).expect("strictly inside");
        let mut h = p.measure().sqrt().recip();
        if child.pos % 2 == 1 {
            h = -h;
        }
        if self.sign == HaarSign::Flipped {
            h = -h;
        }
        let fixed: Vec<(usize, usize)> = self
            .block
            .iter()
            .map(|&b| if b == p.axis { (b, p.heap()) } else { (b, avg.get(b).expect("axis").heap()) })
            .collect();
        let mut strides = vec![1usize; dims.len()];
        for a in (0..dims.len() - 1).rev() {
            strides[a] = strides[a + 1] * dims[a + 1];
        }
        let base: usize = fixed.iter().map(|&(b, i)| i * strides[b]).sum();
        if self.rest.is_empty() {
            return vec![h * table[base]];
        }
        let rest_dims: Vec<usize> = self.rest.iter().map(|&b| dims[b]).collect();
        let count: usize = rest_dims.iter().product();
        let mut out = Vec::with_capacity(count);
        let mut idx = vec![0usize; self.rest.len()];
        for _ in 0..count {
            let off: usize = self.rest.iter().zip(&idx).map(|(&b, &i)| i * strides[b]).sum();
            out.push(h * table[base + off]);
            for t in (0..idx.len()).rev() {
                idx[t] += 1;
                if idx[t] < rest_dims[t] {
                    break;
                }
                idx[t] = 0;
            }
        }
        out
    }

    /// All terms of the expansion of `⟨φ⟩_J - ⟨φ⟩_I`, values as raw vectors
    /// over the remaining axes.
    pub(crate) fn raw_terms(
        &self,
        i: &DyadicRectangle,
        j: &DyadicRectangle,
        k: &DyadicRectangle,
    ) -> Result<Vec<TelescopeTerm<Vec<f64>>>> {
        check_triple(i, j, k)?;
        if i.axes() != self.block {
            return Err(Error::GridMismatch("rectangles must live on the evaluator block".into()));
        }
        i.check_in(&self.grid)?;
        j.check_in(&self.grid)?;
        let mut terms = Vec::new();
        for (slot, &axis) in self.block.iter().enumerate() {
            let mixed = |own: DyadicInterval| {
                let ivs = self
                    .block
                    .iter()
                    .enumerate()
                    .map(|(t, &b)| match t.cmp(&slot) {
                        std::cmp::Ordering::Less => *i.get(b).expect("axis"),
                        std::cmp::Ordering::Equal => own,
                        std::cmp::Ordering::Greater => *j.get(b).expect("axis"),
                    })
                    .collect();
                DyadicRectangle::new(ivs).expect("distinct axes")
            };
            let (ii, jj, kk) = (i.intervals()[slot], j.intervals()[slot], k.intervals()[slot]);
            for t in 1..=(jj.level - kk.level) {
                let anc = jj.ancestor(t).expect("ancestor");
                let rect = mixed(jj);
                let value = self.term_value(&anc, &rect);
                terms.push(TelescopeTerm { axis, side: Side::J, step: t, ancestor: anc, rectangle: rect, value });
            }
            for s in 1..=(ii.level - kk.level) {
                let anc = ii.ancestor(s).expect("ancestor");
                let rect = mixed(ii);
                let value = self.term_value(&anc, &rect).into_iter().map(|v| -v).collect();
                terms.push(TelescopeTerm { axis, side: Side::I, step: s, ancestor: anc, rectangle: rect, value });
            }
        }
        Ok(terms)
    }

    /// Scalar terms; the block must cover every axis.
    pub fn terms(&self, i: &DyadicRectangle, j: &DyadicRectangle, k: &DyadicRectangle) -> Result<Vec<TelescopeTerm<f64>>> {
        if !self.rest.is_empty() {
            return Err(Error::GridMismatch("rectangles must cover every axis".into()));
        }
        Ok(self
            .raw_terms(i, j, k)?
            .into_iter()
            .map(|t| TelescopeTerm { axis: t.axis, side: t.side, step: t.step, ancestor: t.ancestor, rectangle: t.rectangle, value: t.value[0] })
            .collect())
    }

    /// Terms whose values are functions of the axes outside the block.
    pub fn partial_terms(
        &self,
        i: &DyadicRectangle,
        j: &DyadicRectangle,
        k: &DyadicRectangle,
    ) -> Result<Vec<TelescopeTerm<GridFunction>>> {
        let rest = self.rest_grid().ok_or_else(|| Error::GridMismatch("block covers every axis; use terms".into()))?;
        Ok(self
            .raw_terms(i, j, k)?
            .into_iter()
            .map(|t| TelescopeTerm {
                axis: t.axis,
                side: t.side,
                step: t.step,
                ancestor: t.ancestor,
                rectangle: t.rectangle,
                value: GridFunction::from_parts(rest.clone(), t.value),
            })
            .collect())
    }
}

/// Terms of `⟨φ⟩_J - ⟨φ⟩_I` for rectangles covering every axis of `φ`.
pub fn telescoping_terms(
    phi: &GridFunction,
    i: &DyadicRectangle,
    j: &DyadicRectangle,
    k: &DyadicRectangle,
) -> Result<Vec<TelescopeTerm<f64>>> {
    check_triple(i, j, k)?;
    if k.axes().len() != phi.grid().m() {
        return Err(Error::GridMismatch("rectangles must cover every axis".into()));
    }
    TelescopeEvaluator::new(phi, &k.axes())?.terms(i, j, k)
}
