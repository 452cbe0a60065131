//! Muckenhoupt functionals, Bloom weights and seeded cascade weights.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{check_weight, GridFunction, MultiGrid};
use crate::kernels;
use crate::rng::SplitMix64;

/// Optional class metadata carried along with a weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeclaredClass {
    pub p: f64,
    pub bound: f64,
}

/// Strictly positive, finite grid function.
#[derive(Debug, Clone, PartialEq)]
pub struct Weight {
    values: GridFunction,
    declared: Option<DeclaredClass>,
}

impl Weight {
    pub fn new(values: GridFunction) -> Result<Self> {
        check_weight(&values)?;
        Ok(Self { values, declared: None })
    }

    pub fn unit(grid: &MultiGrid) -> Self {
        Self { values: GridFunction::constant(grid, 1.0), declared: None }
    }

    pub fn with_class(mut self, class: DeclaredClass) -> Self {
        self.declared = Some(class);
        self
    }

    pub fn declared(&self) -> Option<DeclaredClass> {
        self.declared
    }

    pub fn values(&self) -> &GridFunction {
        &self.values
    }

    pub fn grid(&self) -> &MultiGrid {
        self.values.grid()
    }

    /// `w^e`, still a weight.
    pub fn power(&self, e: f64) -> Weight {
        Weight { values: self.values.map(|v| v.powf(e)), declared: None }
    }

    /// Restriction to a slice, see [`GridFunction::slice`].
    pub fn slice(&self, fixed: &[(usize, usize)]) -> Result<Weight> {
        Ok(Weight { values: self.values.slice(fixed)?, declared: None })
    }

    /// `w(R) = ∫_R w`.
    pub fn measure_of(&self, r: &crate::grid::DyadicRectangle) -> Result<f64> {
        Ok(crate::grid::average(&self.values, r)? * r.measure())
    }
}

/// Dual exponent `p' = p / (p - 1)`.
pub fn conjugate(p: f64) -> f64 {
    p / (p - 1.0)
}

fn check_p(p: f64) -> Result<()> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidExponent(p))
    }
}

fn ap_over_axes(w: &Weight, p: f64, axes: &[usize]) -> f64 {
    let dims = w.grid().dims();
    let sigma_exp = 1.0 - conjugate(p);
    let sigma: Vec<f64> = w.values().data().iter().map(|v| v.powf(sigma_exp)).collect();
    let (pd, wa) = kernels::pyramid_axes(w.values().data(), &dims, axes);
    let (_, sa) = kernels::pyramid_axes(&sigma, &dims, axes);
    let mut best = f64::NEG_INFINITY;
    kernels::for_each_heap_entry(&pd, axes, |flat, _| {
        best = best.max(wa[flat] * sa[flat].powf(p - 1.0));
    });
    best
}

/// `[w]_{A_p}`: supremum of `⟨w⟩_R ⟨w^{1-p'}⟩_R^{p-1}` over every dyadic
/// rectangle of the grid.
pub fn ap_constant(w: &Weight, p: f64) -> Result<f64> {
    check_p(p)?;
    let axes: Vec<usize> = (0..w.grid().m()).collect();
    Ok(ap_over_axes(w, p, &axes))
}

/// One-parameter `A_p` constant along `axis`, uniform over all slices of the
/// other axes.
pub fn slice_ap_constant(w: &Weight, p: f64, axis: usize) -> Result<f64> {
    check_p(p)?;
    w.grid().check_axis(axis)?;
    Ok(ap_over_axes(w, p, &[axis]))
}

/// One-parameter `A_∞` constant `sup ⟨w⟩_I exp⟨log w^{-1}⟩_I` along `axis`,
/// uniform over all slices of the other axes.
pub fn ainf_constant(w: &Weight, axis: usize) -> Result<f64> {
    w.grid().check_axis(axis)?;
    let dims = w.grid().dims();
    let logs: Vec<f64> = w.values().data().iter().map(|v| v.ln()).collect();
    let (pd, wa) = kernels::pyramid_axes(w.values().data(), &dims, &[axis]);
    let (_, la) = kernels::pyramid_axes(&logs, &dims, &[axis]);
    let mut best = f64::NEG_INFINITY;
    kernels::for_each_heap_entry(&pd, &[axis], |flat, _| {
        best = best.max(wa[flat] * (-la[flat]).exp());
    });
    Ok(best)
}

/// `ν = μ^{1/p} λ^{-1/p}`.
pub fn bloom_weight(mu: &Weight, lambda: &Weight, p: f64) -> Result<Weight> {
    check_p(p)?;
    let values = mu.values().zip_with(lambda.values(), |m, l| (m / l).powf(1.0 / p))?;
    Weight::new(values)
}

/// Multiplicative cascade. Refinement proceeds level by level and, within a
/// level, axis by axis; every current cell draws `ε ~ U[0, roughness)` and a
/// fair sign `s`, and its two halves are multiplied by `1 + sε` and `1 - sε`.
pub fn gen_ap_weight(seed: u64, grid: &MultiGrid, roughness: f64) -> Result<Weight> {
    if !(0.0..1.0).contains(&roughness) {
        return Err(Error::Config(format!("roughness {roughness} outside [0, 1)")));
    }
    let mut rng = SplitMix64::new(seed);
    let m = grid.m();
    let levels = grid.levels();
    let mut data = vec![1.0; grid.len()];
    let coords: Vec<Vec<usize>> = (0..grid.len()).map(|f| grid.unflatten(f)).collect();
    let mut cur = vec![0usize; m];
    let depth = *levels.iter().max().expect("nonempty");
    for level in 0..depth {
        for axis in 0..m {
            if level >= levels[axis] {
                continue;
            }
            let cells: usize = cur.iter().map(|&c| 1usize << c).product();
            let factors: Vec<(f64, f64)> = (0..cells)
                .map(|_| {
                    let eps = rng.uniform(0.0, roughness);
                    let s = if rng.coin() { eps } else { -eps };
                    (1.0 + s, 1.0 - s)
                })
                .collect();
            for (flat, idx) in coords.iter().enumerate() {
                let mut cell = 0usize;
                for b in 0..m {
                    cell = (cell << cur[b]) | (idx[b] >> (levels[b] - cur[b]));
                }
                let right = (idx[axis] >> (levels[axis] - cur[axis] - 1)) & 1 == 1;
                let (l, r) = factors[cell];
                data[flat] *= if right { r } else { l };
            }
            cur[axis] += 1;
        }
    }
    Weight::new(GridFunction::new(grid.clone(), data)?)
}
