//! Seeded random admissible operators.
//!
//! Every coefficient (or coefficient sequence, or symbol) is drawn densely and
//! then rescaled to exactly `θ` times its admissibility bound, with a random
//! sign or shape. `θ = 0` yields the zero operator.

use crate::bmo::{product_bmo_norm, TestFamily};
use crate::error::{Error, Result};
use crate::grid::{GridFunction, MultiGrid};
use crate::haar::ParamSubset;
use crate::rng::{derive_seed, SplitMix64};
use crate::weights::Weight;

use super::full::{FullFlavor, FullParaSpec};
use super::partial::{sequence_bmo, PartialEntry, PartialParaSpec};
use super::shift::{size_bound, ShiftCoeff, ShiftSpec};

fn check_theta(theta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidOperator(format!("saturation fraction {theta} outside [0, 1]")));
    }
    Ok(())
}

/// All `(K, I, J)` heap triples on one axis of depth `n` with `I^{(k)} = K = J^{(l)}`.
fn axis_triples(n: usize, k: usize, l: usize) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    let deepest = k.max(l);
    if deepest >= n {
        return out;
    }
    for level in 0..n - deepest {
        for kh in (1 << level)..(2 << level) {
            for ih in (kh << k)..((kh + 1) << k) {
                for jh in (kh << l)..((kh + 1) << l) {
                    out.push((kh, ih, jh));
                }
            }
        }
    }
    out
}

pub fn gen_shift(seed: u64, grid: &MultiGrid, axes: &ParamSubset, complexity: &[(usize, usize)], theta: f64) -> Result<ShiftSpec> {
    check_theta(theta)?;
    axes.check_in(grid)?;
    if complexity.len() != axes.len() {
        return Err(Error::InvalidOperator("one complexity pair per axis".into()));
    }
    let sorted = axes.sorted();
    let mut pairs: Vec<_> = axes.axes().iter().copied().zip(complexity.iter().copied()).collect();
    pairs.sort_unstable();
    let complexity: Vec<_> = pairs.iter().map(|p| p.1).collect();
    for (&a, &(k, l)) in sorted.iter().zip(&complexity) {
        if k.max(l) >= grid.level(a) {
            return Err(Error::InvalidOperator(format!("complexity ({k},{l}) too deep for axis {a}")));
        }
    }
    let mut rng = SplitMix64::new(seed);
    let mut coeffs = Vec::new();
    if theta > 0.0 {
        let mut keys: Vec<(Vec<usize>, Vec<usize>, Vec<usize>)> = vec![(vec![], vec![], vec![])];
        for (&a, &(k, l)) in sorted.iter().zip(&complexity) {
            let triples = axis_triples(grid.level(a), k, l);
            keys = keys
                .into_iter()
                .flat_map(|(kk, ii, jj)| {
                    triples.iter().map(move |&(kh, ih, jh)| {
                        let (mut kk, mut ii, mut jj) = (kk.clone(), ii.clone(), jj.clone());
                        kk.push(kh);
                        ii.push(ih);
                        jj.push(jh);
                        (kk, ii, jj)
                    })
                })
                .collect();
        }
        for (k, i, j) in keys {
            let sign = if rng.coin() { 1.0 } else { -1.0 };
            let value = sign * theta * size_bound(&k, &i, &j);
            coeffs.push(ShiftCoeff { k, i, j, value });
        }
    }
    ShiftSpec::new(grid, &ParamSubset::new(sorted)?, complexity, coeffs)
}

pub fn gen_partial(
    seed: u64,
    grid: &MultiGrid,
    s: usize,
    t: usize,
    complexity: (usize, usize),
    theta: f64,
) -> Result<PartialParaSpec> {
    check_theta(theta)?;
    grid.check_axis(s)?;
    grid.check_axis(t)?;
    let (ns, nt) = (grid.level(s), grid.level(t));
    let mut rng = SplitMix64::new(seed);
    let mut entries = Vec::new();
    if theta > 0.0 {
        for (k, i, j) in axis_triples(ns, complexity.0, complexity.1) {
            let raw: Vec<(usize, f64)> = (1..1usize << nt).map(|h| (h, rng.uniform(-1.0, 1.0))).collect();
            let norm = sequence_bmo(nt, &raw)?;
            if norm == 0.0 {
                continue;
            }
            let scale = theta * size_bound(&[k], &[i], &[j]) / norm;
            let seq = raw.into_iter().map(|(h, c)| (h, c * scale)).collect();
            entries.push(PartialEntry { k, i, j, seq });
        }
    }
    PartialParaSpec::new(grid, s, t, complexity, entries, false)
}

pub fn gen_full(seed: u64, grid: &MultiGrid, pair: [usize; 2], flavor: FullFlavor, theta: f64) -> Result<FullParaSpec> {
    check_theta(theta)?;
    let sub = grid.sub_grid(&pair)?;
    let mut rng = SplitMix64::new(derive_seed(seed, 0));
    let raw = GridFunction::from_fn(&sub, |_| rng.uniform(-1.0, 1.0))?;
    let norm = product_bmo_norm(&raw, &Weight::unit(&sub), &ParamSubset::all(&sub), TestFamily::Rectangles)?;
    let symbol = if norm == 0.0 || theta == 0.0 { GridFunction::zeros(&sub) } else { raw.scaled(theta / norm) };
    FullParaSpec::new(grid, pair, symbol, flavor)
}
