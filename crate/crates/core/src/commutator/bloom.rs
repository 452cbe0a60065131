use serde::{Deserialize, Serialize};

use crate::bmo::little_product_bmo_norm;
use crate::error::{Error, Result};
use crate::grid::{lp_norm, GridFunction};
use crate::haar;
use crate::rng::SplitMix64;
use crate::weights::{ap_constant, bloom_weight, Weight};

use super::{commutator_apply, CommutatorSpec};

/// Relative size below which a numerator counts as zero when the BMO
/// surrogate vanishes.
const ZERO_NUMERATOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BloomRecord {
    /// `‖C f‖_{L^p(λ)}`.
    pub numerator: f64,
    /// `‖f‖_{L^p(μ)}`.
    pub input_norm: f64,
    /// Little product BMO norm of `b` with respect to `ν`.
    pub bmo: f64,
    pub mu_ap: f64,
    pub lambda_ap: f64,
    pub nu_a2: f64,
    pub ratio: f64,
    /// The surrogate vanished while the numerator did not; `ratio` is `+∞`.
    pub flagged: bool,
}

/// Weights, exponent and their constants, shared by many ratio evaluations.
#[derive(Debug, Clone)]
pub struct BloomContext {
    mu: Weight,
    lambda: Weight,
    nu: Weight,
    p: f64,
    mu_ap: f64,
    lambda_ap: f64,
    nu_a2: f64,
}

impl BloomContext {
    pub fn new(mu: &Weight, lambda: &Weight, p: f64) -> Result<Self> {
        let nu = bloom_weight(mu, lambda, p)?;
        Ok(Self {
            mu_ap: ap_constant(mu, p)?,
            lambda_ap: ap_constant(lambda, p)?,
            nu_a2: ap_constant(&nu, 2.0)?,
            mu: mu.clone(),
            lambda: lambda.clone(),
            nu,
            p,
        })
    }

    pub fn nu(&self) -> &Weight {
        &self.nu
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn measure(&self, c: &CommutatorSpec, f: &GridFunction) -> Result<BloomRecord> {
        if self.mu.grid() != c.grid() || self.lambda.grid() != c.grid() {
            return Err(Error::GridMismatch("weights live on a different grid".into()));
        }
        let input_norm = lp_norm(f, self.p, self.mu.values())?;
        if input_norm == 0.0 {
            return Err(Error::TrivialTestFunction);
        }
        let out = commutator_apply(c, f)?;
        let numerator = lp_norm(&out, self.p, self.lambda.values())?;
        let bmo = little_product_bmo_norm(c.symbol(), &self.nu, c.partition())?;
        let (ratio, flagged) = if bmo > 0.0 {
            (numerator / (bmo * input_norm), false)
        } else {
            let floor = ZERO_NUMERATOR * c.symbol().max_abs() * lp_norm(f, self.p, self.lambda.values())?;
            if numerator <= floor {
                (0.0, false)
            } else {
                (f64::INFINITY, true)
            }
        };
        Ok(BloomRecord {
            numerator,
            input_norm,
            bmo,
            mu_ap: self.mu_ap,
            lambda_ap: self.lambda_ap,
            nu_a2: self.nu_a2,
            ratio,
            flagged,
        })
    }
}

pub fn bloom_ratio(c: &CommutatorSpec, mu: &Weight, lambda: &Weight, p: f64, f: &GridFunction) -> Result<BloomRecord> {
    BloomContext::new(mu, lambda, p)?.measure(c, f)
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub best: BloomRecord,
    /// Best ratio after each iteration.
    pub trajectory: Vec<f64>,
    pub symbol: GridFunction,
    pub input: GridFunction,
}

/// Coordinate ascent over the Haar coefficients of `b` and `f`, starting from
/// a constant symbol and a seeded random input. Even iterations move `b`,
/// odd ones move `f`; each proposes `±δ` on one random coefficient and keeps
/// the better improving move. Both functions are renormalized after every
/// accepted step.
pub fn worst_case_search(
    template: &CommutatorSpec,
    mu: &Weight,
    lambda: &Weight,
    p: f64,
    budget: usize,
    seed: u64,
) -> Result<SearchOutcome> {
    if budget == 0 {
        return Err(Error::Config("search budget must be at least 1".into()));
    }
    let ctx = BloomContext::new(mu, lambda, p)?;
    let grid = template.grid().clone();
    let dims = grid.dims();
    let all: Vec<usize> = (0..grid.m()).collect();
    let mut rng = SplitMix64::new(seed);
    let mut b = vec![0.0; grid.len()];
    b[0] = 1.0;
    let mut f: Vec<f64> = (0..grid.len()).map(|_| rng.uniform(-1.0, 1.0)).collect();

    let eval = |b: &[f64], f: &[f64]| -> Result<(BloomRecord, CommutatorSpec, GridFunction)> {
        let spec = template.with_symbol(GridFunction::new(grid.clone(), haar::inverse_axes(b, &dims, &all))?)?;
        let input = GridFunction::new(grid.clone(), haar::inverse_axes(f, &dims, &all))?;
        Ok((ctx.measure(&spec, &input)?, spec, input))
    };
    let (mut best, mut spec, mut input) = eval(&b, &f)?;
    let mut trajectory = Vec::with_capacity(budget);
    for it in 0..budget {
        let move_b = it % 2 == 0;
        let target = if move_b { &b } else { &f };
        let slot = if move_b { 1 + rng.below(grid.len() - 1) } else { rng.below(grid.len()) };
        let scale = target.iter().skip(usize::from(move_b)).fold(0.0f64, |m, v| m.max(v.abs()));
        let delta = if scale > 0.0 { scale } else { 1.0 } * rng.uniform(0.1, 1.0);
        let mut accepted = None;
        for d in [delta, -delta] {
            let (mut nb, mut nf) = (b.clone(), f.clone());
            if move_b {
                nb[slot] += d;
            } else {
                nf[slot] += d;
            }
            let Ok((rec, s, x)) = eval(&nb, &nf) else { continue };
            let current = accepted.as_ref().map_or(best.ratio, |a: &(BloomRecord, _, _, _, _)| a.0.ratio);
            if !rec.flagged && rec.ratio.is_finite() && rec.ratio > current {
                accepted = Some((rec, s, x, nb, nf));
            }
        }
        if let Some((rec, s, x, nb, nf)) = accepted {
            let (sb, sf) = (if rec.bmo > 0.0 { rec.bmo.recip() } else { 1.0 }, rec.input_norm.recip());
            b = nb.iter().map(|v| v * sb).collect();
            f = nf.iter().map(|v| v * sf).collect();
            best = rec;
            spec = s;
            input = x;
        }
        trajectory.push(best.ratio);
    }
    Ok(SearchOutcome { best, trajectory, symbol: spec.symbol().clone(), input })
}
