//! One-dimensional dyadic kernels and the axis-mapping machinery that lifts
//! them to tensors.
//!
//! Interval arrays along an axis of depth `n` (line length `N = 2^n`) use the
//! heap numbering: the interval at level `l` and position `p` sits at index
//! `2^l + p`. Packed Haar arrays have length `N` and reuse that numbering for
//! the cancellative intervals, with slot 0 holding the top average. Pyramid
//! arrays cover every level including the finest cells and have length `2N`
//! with slot 0 unused.

/// Row-major dims: returns (outer, inner) sizes around `axis`.
pub(crate) fn split_dims(dims: &[usize], axis: usize) -> (usize, usize) {
    let outer = dims[..axis].iter().product();
    let inner = dims[axis + 1..].iter().product();
    (outer, inner)
}

/// Applies `kernel` to every line along `axis`, producing a tensor whose
/// extent along `axis` is `out_len`. The kernel receives a zeroed output.
pub(crate) fn map_axis<F>(
    data: &[f64],
    dims: &[usize],
    axis: usize,
    out_len: usize,
    mut kernel: F,
) -> Vec<f64>
where
    F: FnMut(&[f64], &mut [f64]),
{
    let n_in = dims[axis];
    let (outer, inner) = split_dims(dims, axis);
    debug_assert_eq!(data.len(), outer * n_in * inner);
    let mut out = vec![0.0; outer * out_len * inner];
    let mut line_in = vec![0.0; n_in];
    let mut line_out = vec![0.0; out_len];
    for o in 0..outer {
        let base_in = o * n_in * inner;
        let base_out = o * out_len * inner;
        for i in 0..inner {
            for (t, slot) in line_in.iter_mut().enumerate() {
                *slot = data[base_in + i + t * inner];
            }
            line_out.fill(0.0);
            kernel(&line_in, &mut line_out);
            for (t, v) in line_out.iter().enumerate() {
                out[base_out + i + t * inner] = *v;
            }
        }
    }
    out
}

pub(crate) fn log2_exact(n: usize) -> usize {
    debug_assert!(n.is_power_of_two());
    n.trailing_zeros() as usize
}

/// Level of a heap index.
pub(crate) fn heap_level(h: usize) -> usize {
    (usize::BITS - 1 - h.leading_zeros()) as usize
}

/// Orthonormal Haar analysis of one line into packed order.
pub(crate) fn haar_forward(x: &[f64], out: &mut [f64], scratch: &mut Vec<f64>) {
    let n = x.len();
    scratch.clear();
    scratch.extend_from_slice(x);
    let mut half = n / 2;
    while half >= 1 {
        let scale = 0.5 / (half as f64).sqrt();
        for pos in 0..half {
            let a = scratch[2 * pos];
            let b = scratch[2 * pos + 1];
            out[half + pos] = scale * (a - b);
            scratch[pos] = 0.5 * (a + b);
        }
        half /= 2;
    }
    out[0] = scratch[0];
}

/// Inverse of [`haar_forward`].
pub(crate) fn haar_inverse(c: &[f64], out: &mut [f64]) {
    let n = c.len();
    out[0] = c[0];
    let mut half = 1;
    while half < n {
        let scale = (half as f64).sqrt();
        for pos in (0..half).rev() {
            let avg = out[pos];
            let d = c[half + pos] * scale;
            out[2 * pos] = avg + d;
            out[2 * pos + 1] = avg - d;
        }
        half *= 2;
    }
}

/// Averages over every dyadic interval, heap indexed, length `2N`.
pub(crate) fn pyramid_mean(x: &[f64], out: &mut [f64]) {
    let n = x.len();
    out[n..2 * n].copy_from_slice(x);
    for h in (1..n).rev() {
        out[h] = 0.5 * (out[2 * h] + out[2 * h + 1]);
    }
}

/// Sums over every dyadic interval, heap indexed, length `2N`.
pub(crate) fn pyramid_sum(x: &[f64], out: &mut [f64]) {
    let n = x.len();
    out[n..2 * n].copy_from_slice(x);
    for h in (1..n).rev() {
        out[h] = out[2 * h] + out[2 * h + 1];
    }
}

/// Cell `j` receives the sum of `v` over the cancellative intervals containing it.
pub(crate) fn chain_sum_cancellative(v: &[f64], out: &mut [f64]) {
    let n = out.len();
    if n == 1 {
        return;
    }
    let mut acc = vec![0.0; n];
    acc[1] = v[1];
    for h in 2..n {
        acc[h] = acc[h / 2] + v[h];
    }
    for (j, o) in out.iter_mut().enumerate() {
        *o = acc[(n + j) / 2];
    }
}

/// Cell `j` receives the maximum of the heap array `v` over every interval containing it.
pub(crate) fn chain_max(v: &[f64], out: &mut [f64]) {
    let n = out.len();
    let mut acc = vec![f64::NEG_INFINITY; 2 * n];
    acc[1] = v[1];
    for h in 2..2 * n {
        acc[h] = acc[h / 2].max(v[h]);
    }
    out.copy_from_slice(&acc[n..2 * n]);
}

/// Synthesis of averaging atoms: heap value `c_h` stands for `c_h 1_K / |K|`.
pub(crate) fn spread_atoms(v: &[f64], out: &mut [f64]) {
    let n = out.len();
    let mut acc = vec![0.0; 2 * n];
    acc[1] = v[1];
    for h in 2..2 * n {
        acc[h] = acc[h / 2] + v[h] * (1usize << heap_level(h)) as f64;
    }
    out.copy_from_slice(&acc[n..2 * n]);
}

/// Sum of the packed cancellative values over every interval contained in each
/// heap interval (inclusive), length `2N`.
pub(crate) fn subtree_sum(c: &[f64], out: &mut [f64]) {
    let n = c.len();
    for h in (1..2 * n).rev() {
        let own = if h < n { c[h] } else { 0.0 };
        let below = if 2 * h < 2 * n { out[2 * h] + out[2 * h + 1] } else { 0.0 };
        out[h] = own + below;
    }
}

/// Visits every flat index of the row-major box `ranges` inside `dims`.
pub(crate) fn for_each_in_box<F: FnMut(usize)>(dims: &[usize], ranges: &[(usize, usize)], mut f: F) {
    let m = dims.len();
    if ranges.iter().any(|(a, b)| a >= b) {
        return;
    }
    let mut strides = vec![1usize; m];
    for a in (0..m.saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * dims[a + 1];
    }
    let last = m - 1;
    let (l0, l1) = ranges[last];
    let mut idx: Vec<usize> = ranges.iter().map(|r| r.0).collect();
    loop {
        let base: usize = (0..last).map(|a| idx[a] * strides[a]).sum();
        for t in l0..l1 {
            f(base + t);
        }
        let mut a = last;
        loop {
            if a == 0 {
                return;
            }
            a -= 1;
            idx[a] += 1;
            if idx[a] < ranges[a].1 {
                break;
            }
            idx[a] = ranges[a].0;
        }
    }
}

/// Applies [`pyramid_mean`] along each listed axis; returns the new dims.
pub(crate) fn pyramid_axes(data: &[f64], dims: &[usize], axes: &[usize]) -> (Vec<usize>, Vec<f64>) {
    let mut d = dims.to_vec();
    let mut out = data.to_vec();
    for &a in axes {
        out = map_axis(&out, &d, a, 2 * d[a], pyramid_mean);
        d[a] *= 2;
    }
    (d, out)
}

/// Calls `f(flat, heap_indices)` for every entry of a tensor whose listed axes
/// are heap indexed, skipping the unused slot 0 on those axes.
pub(crate) fn for_each_heap_entry<F: FnMut(usize, &[usize])>(dims: &[usize], heap_axes: &[usize], mut f: F) {
    let m = dims.len();
    let total: usize = dims.iter().product();
    let mut idx = vec![0usize; m];
    for flat in 0..total {
        if heap_axes.iter().all(|&a| idx[a] != 0) {
            f(flat, &idx);
        }
        for a in (0..m).rev() {
            idx[a] += 1;
            if idx[a] < dims[a] {
                break;
            }
            idx[a] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haar_round_trip_on_eight_points() {
        let x = [1.0, -2.0, 0.5, 3.0, 4.0, 4.0, -1.0, 0.25];
        let mut c = [0.0; 8];
        let mut scratch = Vec::new();
        haar_forward(&x, &mut c, &mut scratch);
        let mut y = [0.0; 8];
        haar_inverse(&c, &mut y);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-14);
        }
        let energy: f64 = x.iter().map(|v| v * v).sum::<f64>() / 8.0;
        let coeff_energy: f64 = c.iter().map(|v| v * v).sum();
        assert!((energy - coeff_energy).abs() < 1e-13);
    }

    #[test]
    fn pyramid_and_chains_on_four_points() {
        let x = [1.0, 3.0, 5.0, 7.0];
        let mut p = [0.0; 8];
        pyramid_mean(&x, &mut p);
        assert_eq!(&p[1..4], &[4.0, 2.0, 6.0]);
        let mut m = [0.0; 4];
        chain_max(&p, &mut m);
        assert_eq!(m, [4.0, 4.0, 6.0, 7.0]);
        let mut s = [0.0; 4];
        chain_sum_cancellative(&[9.0, 1.0, 10.0, 100.0], &mut s);
        assert_eq!(s, [11.0, 11.0, 101.0, 101.0]);
    }

    #[test]
    fn box_visit_order_is_row_major() {
        let mut seen = Vec::new();
        for_each_in_box(&[2, 4], &[(0, 2), (1, 3)], |f| seen.push(f));
        assert_eq!(seen, vec![1, 2, 5, 6]);
    }
}
