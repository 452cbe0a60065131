//! Dyadic geometry of `[0,1)^m` and dense function storage.
//!
//! Axes are numbered from 0. Data is stored row-major with axis 0 slowest, one
//! entry per finest cell.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels;

pub const MAX_AXES: usize = 6;
pub const MAX_LEVEL: usize = 12;
pub const MAX_TOTAL_LEVEL: usize = 24;

/// Tensor-product dyadic discretization with a depth per axis.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct MultiGrid {
    levels: Vec<usize>,
}

impl TryFrom<Vec<usize>> for MultiGrid {
    type Error = Error;
    fn try_from(levels: Vec<usize>) -> Result<Self> {
        MultiGrid::new(levels)
    }
}

impl From<MultiGrid> for Vec<usize> {
    fn from(g: MultiGrid) -> Self {
        g.levels
    }
}

impl MultiGrid {
    pub fn new(levels: Vec<usize>) -> Result<Self> {
        if levels.is_empty() || levels.len() > MAX_AXES {
            return Err(Error::InvalidGrid(format!(
                "axis count {} outside 1..={MAX_AXES}",
                levels.len()
            )));
        }
        if let Some(n) = levels.iter().find(|&&n| n == 0 || n > MAX_LEVEL) {
            return Err(Error::InvalidGrid(format!("depth {n} outside 1..={MAX_LEVEL}")));
        }
        let total: usize = levels.iter().sum();
        if total > MAX_TOTAL_LEVEL {
            return Err(Error::InvalidGrid(format!(
                "2^{total} cells exceeds 2^{MAX_TOTAL_LEVEL}"
            )));
        }
        Ok(Self { levels })
    }

    /// `m` axes of equal depth.
    pub fn uniform(m: usize, depth: usize) -> Result<Self> {
        Self::new(vec![depth; m])
    }

    pub fn m(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn level(&self, axis: usize) -> usize {
        self.levels[axis]
    }

    pub fn axis_len(&self, axis: usize) -> usize {
        1 << self.levels[axis]
    }

    pub fn dims(&self) -> Vec<usize> {
        self.levels.iter().map(|&n| 1usize << n).collect()
    }

    pub fn len(&self) -> usize {
        1 << self.levels.iter().sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Exact power of two.
    pub fn cell_volume(&self) -> f64 {
        (0.5f64).powi(self.levels.iter().sum::<usize>() as i32)
    }

    pub fn strides(&self) -> Vec<usize> {
        let m = self.m();
        let mut s = vec![1usize; m];
        for a in (0..m - 1).rev() {
            s[a] = s[a + 1] * self.axis_len(a + 1);
        }
        s
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        let mut flat = 0;
        for (a, &i) in idx.iter().enumerate() {
            flat = flat * self.axis_len(a) + i;
        }
        flat
    }

    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.m()];
        for a in (0..self.m()).rev() {
            let len = self.axis_len(a);
            idx[a] = flat % len;
            flat /= len;
        }
        idx
    }

    pub fn check_axis(&self, axis: usize) -> Result<()> {
        if axis >= self.m() {
            Err(Error::AxisOutOfRange { axis, m: self.m() })
        } else {
            Ok(())
        }
    }

    /// Grid over the listed axes, in the listed order.
    pub fn sub_grid(&self, axes: &[usize]) -> Result<MultiGrid> {
        for &a in axes {
            self.check_axis(a)?;
        }
        MultiGrid::new(axes.iter().map(|&a| self.levels[a]).collect())
    }

    /// Axes not in `axes`, ascending.
    pub fn complement(&self, axes: &[usize]) -> Vec<usize> {
        (0..self.m()).filter(|a| !axes.contains(a)).collect()
    }
}

/// A dyadic interval on one axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicInterval {
    pub axis: usize,
    pub level: usize,
    pub pos: usize,
}

impl DyadicInterval {
    pub fn new(axis: usize, level: usize, pos: usize) -> Result<Self> {
        if level > MAX_LEVEL || pos >= (1usize << level) {
            return Err(Error::InvalidLevel(format!(
                "interval level {level} position {pos} on axis {axis}"
            )));
        }
        Ok(Self { axis, level, pos })
    }

    pub fn whole(axis: usize) -> Self {
        Self { axis, level: 0, pos: 0 }
    }

    /// Interval with heap index `h = 2^level + pos`.
    pub fn from_heap(axis: usize, h: usize) -> Self {
        let level = kernels::heap_level(h);
        Self { axis, level, pos: h - (1 << level) }
    }

    /// Heap index, which is also the packed Haar slot when the level is cancellative.
    pub fn heap(&self) -> usize {
        (1 << self.level) + self.pos
    }

    pub fn measure(&self) -> f64 {
        (0.5f64).powi(self.level as i32)
    }

    pub fn parent(&self) -> Option<Self> {
        self.ancestor(1)
    }

    /// The `k`-th ancestor `I^{(k)}`.
    pub fn ancestor(&self, k: usize) -> Option<Self> {
        (k <= self.level).then(|| Self { axis: self.axis, level: self.level - k, pos: self.pos >> k })
    }

    pub fn children(&self) -> [Self; 2] {
        let c = |pos| Self { axis: self.axis, level: self.level + 1, pos };
        [c(2 * self.pos), c(2 * self.pos + 1)]
    }

    /// All descendants exactly `k` levels down, left to right.
    pub fn descendants(&self, k: usize) -> impl Iterator<Item = Self> + '_ {
        let level = self.level + k;
        (self.pos << k..(self.pos + 1) << k).map(move |pos| Self { axis: self.axis, level, pos })
    }

    pub fn contains(&self, other: &Self) -> bool {
        self.axis == other.axis
            && other.level >= self.level
            && other.pos >> (other.level - self.level) == self.pos
    }

    /// Finest-cell index range on an axis of depth `n`.
    pub fn cell_range(&self, n: usize) -> (usize, usize) {
        let w = 1usize << (n - self.level);
        (self.pos * w, (self.pos + 1) * w)
    }

    /// Value of `h_I` at a finest cell of an axis of depth `n`.
    pub fn haar_at(&self, cell: usize, n: usize) -> f64 {
        let (lo, hi) = self.cell_range(n);
        if cell < lo || cell >= hi {
            return 0.0;
        }
        let amp = (1u64 << self.level) as f64;
        let amp = amp.sqrt();
        if cell < (lo + hi) / 2 {
            amp
        } else {
            -amp
        }
    }
}

/// Product of dyadic intervals over distinct axes, kept sorted by axis.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicRectangle {
    intervals: Vec<DyadicInterval>,
}

impl DyadicRectangle {
    pub fn new(mut intervals: Vec<DyadicInterval>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::EmptySubset);
        }
        intervals.sort_by_key(|i| i.axis);
        for w in intervals.windows(2) {
            if w[0].axis == w[1].axis {
                return Err(Error::RepeatedAxis(w[0].axis));
            }
        }
        Ok(Self { intervals })
    }

    /// The whole domain restricted to `axes`.
    pub fn whole(axes: &[usize]) -> Result<Self> {
        Self::new(axes.iter().map(|&a| DyadicInterval::whole(a)).collect())
    }

    pub fn intervals(&self) -> &[DyadicInterval] {
        &self.intervals
    }

    pub fn axes(&self) -> Vec<usize> {
        self.intervals.iter().map(|i| i.axis).collect()
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|i| i.measure()).product()
    }

    pub fn get(&self, axis: usize) -> Option<&DyadicInterval> {
        self.intervals.iter().find(|i| i.axis == axis)
    }

    pub fn contains(&self, other: &Self) -> bool {
        self.intervals.len() == other.intervals.len()
            && self.intervals.iter().zip(&other.intervals).all(|(a, b)| a.contains(b))
    }

    /// Validates axes and levels against a grid.
    pub fn check_in(&self, grid: &MultiGrid) -> Result<()> {
        for i in &self.intervals {
            grid.check_axis(i.axis)?;
            if i.level > grid.level(i.axis) {
                return Err(Error::InvalidLevel(format!(
                    "level {} exceeds depth {} on axis {}",
                    i.level,
                    grid.level(i.axis),
                    i.axis
                )));
            }
        }
        Ok(())
    }

    /// Per-axis finest-cell ranges over the whole grid (full range off the rectangle).
    pub fn cell_box(&self, grid: &MultiGrid) -> Vec<(usize, usize)> {
        (0..grid.m())
            .map(|a| match self.get(a) {
                Some(i) => i.cell_range(grid.level(a)),
                None => (0, grid.axis_len(a)),
            })
            .collect()
    }
}

/// Dense real tensor on the finest cells of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: MultiGrid,
    data: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: MultiGrid, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "data length {} but grid has {} cells",
                data.len(),
                grid.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { grid, data })
    }

    pub(crate) fn from_parts(grid: MultiGrid, data: Vec<f64>) -> Self {
        debug_assert_eq!(grid.len(), data.len());
        Self { grid, data }
    }

    pub fn zeros(grid: &MultiGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &MultiGrid, c: f64) -> Self {
        Self { grid: grid.clone(), data: vec![c; grid.len()] }
    }

    /// Builds from a closure over per-axis cell indices.
    pub fn from_fn<F: FnMut(&[usize]) -> f64>(grid: &MultiGrid, mut f: F) -> Result<Self> {
        let data = (0..grid.len()).map(|flat| f(&grid.unflatten(flat))).collect();
        Self::new(grid.clone(), data)
    }

    /// Tensor product of one line per axis.
    pub fn tensor(grid: &MultiGrid, lines: &[Vec<f64>]) -> Result<Self> {
        if lines.len() != grid.m() || (0..grid.m()).any(|a| lines[a].len() != grid.axis_len(a)) {
            return Err(Error::GridMismatch("tensor factor lengths".into()));
        }
        Self::from_fn(grid, |idx| idx.iter().enumerate().map(|(a, &i)| lines[a][i]).product())
    }

    pub fn grid(&self) -> &MultiGrid {
        &self.grid
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.grid.flat_index(idx)]
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        Self { grid: self.grid.clone(), data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!(
                "{:?} vs {:?}",
                self.grid.levels(),
                other.grid.levels()
            )));
        }
        Ok(())
    }

    pub fn zip_with<F: Fn(f64, f64) -> f64>(&self, other: &Self, f: F) -> Result<Self> {
        self.check_same(other)?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid.clone(), data })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub(crate) fn add_assign_unchecked(&mut self, other: &Self, c: f64) {
        debug_assert_eq!(self.grid, other.grid);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same(other)?;
        Ok(self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// `max |self - reference| / max |reference|`, or the absolute difference
    /// when the reference vanishes.
    pub fn relative_diff(&self, reference: &Self) -> Result<f64> {
        let diff = self.max_abs_diff(reference)?;
        let scale = reference.max_abs();
        Ok(if scale > 0.0 { diff / scale } else { diff })
    }

    /// Constant extension of a function on a sub-product of axes to `grid`.
    pub fn broadcast(&self, axes: &[usize], grid: &MultiGrid) -> Result<Self> {
        if axes.len() != self.grid.m() {
            return Err(Error::GridMismatch("broadcast axes do not match function".into()));
        }
        for (k, &a) in axes.iter().enumerate() {
            grid.check_axis(a)?;
            if grid.level(a) != self.grid.level(k) {
                return Err(Error::GridMismatch(format!("depth mismatch on axis {a}")));
            }
        }
        let data = (0..grid.len())
            .map(|flat| {
                let idx = grid.unflatten(flat);
                let sub: Vec<usize> = axes.iter().map(|&a| idx[a]).collect();
                self.get(&sub)
            })
            .collect();
        Ok(Self { grid: grid.clone(), data })
    }

    /// Fixes the listed axes at finest-cell indices; the result lives on the
    /// remaining axes in ascending order.
    pub fn slice(&self, fixed: &[(usize, usize)]) -> Result<Self> {
        let fixed_axes: Vec<usize> = fixed.iter().map(|f| f.0).collect();
        let rest = self.grid.complement(&fixed_axes);
        if rest.is_empty() {
            return Err(Error::EmptySubset);
        }
        let mut dims = self.grid.dims();
        let mut data = self.data.clone();
        for &(axis, cell) in fixed {
            self.grid.check_axis(axis)?;
            if cell >= dims[axis] {
                return Err(Error::InvalidLevel(format!("cell {cell} on axis {axis}")));
            }
            data = kernels::map_axis(&data, &dims, axis, 1, |x, o| o[0] = x[cell]);
            dims[axis] = 1;
        }
        Ok(Self { grid: self.grid.sub_grid(&rest)?, data })
    }
}

fn check_full(f: &GridFunction, r: &DyadicRectangle) -> Result<()> {
    r.check_in(f.grid())?;
    Ok(())
}

/// Mean of `f` over a rectangle covering every axis.
pub fn average(f: &GridFunction, r: &DyadicRectangle) -> Result<f64> {
    check_full(f, r)?;
    if r.intervals().len() != f.grid().m() {
        return Err(Error::GridMismatch(
            "rectangle must cover every axis for a scalar average; use partial_average".into(),
        ));
    }
    let bx = r.cell_box(f.grid());
    let mut sum = 0.0;
    let mut count = 0usize;
    kernels::for_each_in_box(&f.grid().dims(), &bx, |flat| {
        sum += f.data()[flat];
        count += 1;
    });
    Ok(sum / count as f64)
}

/// Average over a rectangle on a proper subset of axes; the result lives on
/// the remaining axes.
pub fn partial_average(f: &GridFunction, r: &DyadicRectangle) -> Result<GridFunction> {
    check_full(f, r)?;
    let rest = f.grid().complement(&r.axes());
    if rest.is_empty() {
        return Err(Error::GridMismatch(
            "rectangle covers every axis; use average".into(),
        ));
    }
    let mut dims = f.grid().dims();
    let mut data = f.data().to_vec();
    for i in r.intervals() {
        let (lo, hi) = i.cell_range(f.grid().level(i.axis));
        let w = (hi - lo) as f64;
        data = kernels::map_axis(&data, &dims, i.axis, 1, |x, o| {
            o[0] = x[lo..hi].iter().sum::<f64>() / w;
        });
        dims[i.axis] = 1;
    }
    Ok(GridFunction::from_parts(f.grid().sub_grid(&rest)?, data))
}

/// `∫ f g` over the shared grid.
pub fn inner_product(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    f.check_same(g)?;
    let s: f64 = f.data().iter().zip(g.data()).map(|(a, b)| a * b).sum();
    Ok(s * f.grid().cell_volume())
}

/// Partial pairing `⟨f, g⟩_axes` with `g` living on the listed axes; the
/// result lives on the complementary axes.
pub fn partial_pairing(f: &GridFunction, g: &GridFunction, axes: &[usize]) -> Result<GridFunction> {
    let grid = f.grid();
    let sub = grid.sub_grid(axes)?;
    if sub != *g.grid() {
        return Err(Error::GridMismatch("pairing factor does not match the listed axes".into()));
    }
    let rest = grid.complement(axes);
    if rest.is_empty() {
        return Err(Error::GridMismatch("pairing covers every axis; use inner_product".into()));
    }
    let out_grid = grid.sub_grid(&rest)?;
    let mut out = vec![0.0; out_grid.len()];
    let vol = sub.cell_volume();
    for (flat, &v) in f.data().iter().enumerate() {
        let idx = grid.unflatten(flat);
        let gi: Vec<usize> = axes.iter().map(|&a| idx[a]).collect();
        let oi: Vec<usize> = rest.iter().map(|&a| idx[a]).collect();
        out[out_grid.flat_index(&oi)] += v * g.get(&gi) * vol;
    }
    Ok(GridFunction::from_parts(out_grid, out))
}

pub(crate) fn check_weight(w: &GridFunction) -> Result<()> {
    match w.data().iter().position(|&v| !v.is_finite() || v <= 0.0) {
        Some(index) => Err(Error::NotAWeight { index, value: w.data()[index] }),
        None => Ok(()),
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if p > 0.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidExponent(p))
    }
}

pub(crate) fn pow_abs(x: f64, p: f64) -> f64 {
    let a = x.abs();
    if p == 2.0 {
        a * a
    } else if p == 1.0 {
        a
    } else {
        a.powf(p)
    }
}

/// `(∫ |f|^p w)^{1/p}`.
pub fn lp_norm(f: &GridFunction, p: f64, w: &GridFunction) -> Result<f64> {
    check_exponent(p)?;
    f.check_same(w)?;
    check_weight(w)?;
    let s: f64 = f.data().iter().zip(w.data()).map(|(&v, &wt)| pow_abs(v, p) * wt).sum();
    Ok((s * f.grid().cell_volume()).powf(1.0 / p))
}

/// Unweighted `L^p` norm.
pub fn lp_norm_unweighted(f: &GridFunction, p: f64) -> Result<f64> {
    check_exponent(p)?;
    let s: f64 = f.data().iter().map(|&v| pow_abs(v, p)).sum();
    Ok((s * f.grid().cell_volume()).powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(levels: &[usize]) -> MultiGrid {
        MultiGrid::new(levels.to_vec()).unwrap()
    }

    #[test]
    fn grid_limits() {
        assert!(MultiGrid::new(vec![]).is_err());
        assert!(MultiGrid::new(vec![13]).is_err());
        assert!(MultiGrid::new(vec![12, 12, 1]).is_err());
        assert!(MultiGrid::new(vec![1; 7]).is_err());
        assert_eq!(g(&[12, 12]).len(), 1 << 24);
        assert_eq!(g(&[3, 2]).cell_volume(), 1.0 / 32.0);
    }

    #[test]
    fn interval_tiling_and_children() {
        for level in 0..5 {
            let ivs: Vec<_> = (0..1 << level).map(|p| DyadicInterval::new(0, level, p).unwrap()).collect();
            let total: f64 = ivs.iter().map(|i| i.measure()).sum();
            assert_eq!(total, 1.0);
            for i in &ivs {
                let [l, r] = i.children();
                assert_eq!(l.parent(), Some(*i));
                assert_eq!(r.parent(), Some(*i));
                assert!(i.contains(&l) && i.contains(&r));
                assert_eq!(DyadicInterval::from_heap(0, i.heap()), *i);
            }
        }
    }

    #[test]
    fn average_of_left_indicator_is_half() {
        let grid = g(&[2, 1]);
        let f = GridFunction::from_fn(&grid, |i| if i[0] < 2 { 1.0 } else { 0.0 }).unwrap();
        let r = DyadicRectangle::whole(&[0, 1]).unwrap();
        assert_eq!(average(&f, &r).unwrap(), 0.5);
    }

    #[test]
    fn average_rejects_deep_levels() {
        let grid = g(&[2]);
        let f = GridFunction::zeros(&grid);
        let r = DyadicRectangle::new(vec![DyadicInterval::new(0, 3, 0).unwrap()]).unwrap();
        assert!(matches!(average(&f, &r), Err(Error::InvalidLevel(_))));
    }

    #[test]
    fn first_column_average_on_two_by_two() {
        let grid = g(&[1, 1]);
        let f = GridFunction::new(grid, vec![1.0, 2.0, 5.0, 7.0]).unwrap();
        let r = DyadicRectangle::new(vec![
            DyadicInterval::whole(0),
            DyadicInterval::new(1, 1, 0).unwrap(),
        ])
        .unwrap();
        assert_eq!(average(&f, &r).unwrap(), 3.0);
    }

    #[test]
    fn partial_average_and_pairing() {
        let grid = g(&[1, 2]);
        let f = GridFunction::from_fn(&grid, |i| (i[0] * 4 + i[1]) as f64).unwrap();
        let r = DyadicRectangle::new(vec![DyadicInterval::whole(0)]).unwrap();
        let pa = partial_average(&f, &r).unwrap();
        assert_eq!(pa.data(), &[2.0, 3.0, 4.0, 5.0]);
        let one = GridFunction::constant(&grid.sub_grid(&[0]).unwrap(), 1.0);
        let pp = partial_pairing(&f, &one, &[0]).unwrap();
        assert_eq!(pp, pa);
    }

    #[test]
    fn slice_extracts_lines() {
        let grid = g(&[1, 2]);
        let f = GridFunction::from_fn(&grid, |i| (i[0] * 4 + i[1]) as f64).unwrap();
        assert_eq!(f.slice(&[(0, 1)]).unwrap().data(), &[4.0, 5.0, 6.0, 7.0]);
        assert_eq!(f.slice(&[(1, 2)]).unwrap().data(), &[2.0, 6.0]);
    }

    #[test]
    fn weighted_norm_basics() {
        let grid = g(&[2, 2]);
        let one = GridFunction::constant(&grid, 1.0);
        for p in [0.5, 1.0, 2.0, 3.7] {
            assert!((lp_norm(&one, p, &one).unwrap() - 1.0).abs() < 1e-15);
        }
        let mut bad = one.clone().into_data();
        bad[3] = 0.0;
        let bad = GridFunction::new(grid.clone(), bad).unwrap();
        assert!(matches!(lp_norm(&one, 2.0, &bad), Err(Error::NotAWeight { index: 3, .. })));
        assert!(GridFunction::new(grid, vec![f64::NAN; 16]).is_err());
    }

    #[test]
    fn broadcast_round_trip() {
        let grid = g(&[1, 2]);
        let line = GridFunction::new(grid.sub_grid(&[1]).unwrap(), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = line.broadcast(&[1], &grid).unwrap();
        assert_eq!(b.slice(&[(0, 1)]).unwrap(), line);
    }
}
