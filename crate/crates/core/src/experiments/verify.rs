//! Exact-identity suites over the canonical grids, with replayable failures.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::commutator::{commutator_apply, commutator_expand, illegal_group, telescoped_illegal_group, CommutatorSpec};
use crate::error::{Error, Result};
use crate::grid::{average, inner_product, partial_average, DyadicInterval, DyadicRectangle, GridFunction, MultiGrid};
use crate::haar::{self, haar_function, martingale_diff, HaarSign, ParamSubset, TelescopeEvaluator};
use crate::ops::{product_expansion, FullFlavor, OperatorFile, OperatorSpec};
use crate::ops::{gen_full, gen_partial, gen_shift};
use crate::rng::{derive_seed, SplitMix64};

use super::config::random_function;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Orthonormality,
    Parseval,
    Expansion,
    Telescoping,
    Commutator,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Orthonormality, Suite::Parseval, Suite::Expansion, Suite::Telescoping, Suite::Commutator];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Orthonormality => "orthonormality",
            Suite::Parseval => "parseval",
            Suite::Expansion => "expansion",
            Suite::Telescoping => "telescoping",
            Suite::Commutator => "commutator",
        }
    }

    pub fn tolerance(self) -> f64 {
        match self {
            Suite::Orthonormality => 1e-15,
            Suite::Parseval => 1e-13,
            Suite::Expansion | Suite::Telescoping => 1e-12,
            Suite::Commutator => 1e-11,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown suite {s:?}")))
    }
}

/// `m ∈ {1, 2, 3}` crossed with uniform depth `∈ {2, 3, 4}`.
pub fn canonical_grids() -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for m in 1..=3 {
        for depth in 2..=4 {
            out.push(vec![depth; m]);
        }
    }
    out
}

/// Grids with more telescoping triples than this are sampled by stratum.
pub const EXHAUSTIVE_TRIPLES: u64 = 60_000_000;
/// Seeded samples per `(level of K, level of I, level of J)` stratum.
pub const STRATUM_SAMPLES: usize = 3;
/// Rectangle pairs checked exhaustively up to this many pairs.
const EXHAUSTIVE_PAIRS: usize = 200_000;
const SAMPLED_PAIRS: usize = 5_000;

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub suites: Vec<Suite>,
    pub grids: Vec<Vec<usize>>,
    pub seed: u64,
    /// Mutation hook for the telescoping evaluator.
    pub haar_sign: HaarSign,
    /// Where failing instances are written; `None` keeps them in memory only.
    pub artifact_dir: Option<PathBuf>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { suites: Suite::ALL.to_vec(), grids: canonical_grids(), seed: 0, haar_sign: HaarSign::Standard, artifact_dir: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case", deny_unknown_fields)]
pub enum Case {
    /// Two Haar functions given by per-axis heap indices.
    HaarPair { a: Vec<usize>, b: Vec<usize> },
    /// Round trip, Parseval and martingale completeness of `inputs[0]`.
    Function,
    /// Product expansion of `inputs[0] · inputs[1]` over `axes`.
    Expansion { axes: Vec<usize> },
    /// Telescoping of `inputs[0]` for one `(I, J, K)`.
    Triple { i: Vec<usize>, j: Vec<usize>, k: Vec<usize> },
    /// Symbol `inputs[0]`, input `inputs[1]`.
    Commutator { operators: Vec<OperatorFile>, telescoped: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplayArtifact {
    pub version: u32,
    pub suite: Suite,
    pub levels: Vec<usize>,
    pub seed: u64,
    pub flipped_sign: bool,
    pub case: Case,
    pub inputs: Vec<Vec<f64>>,
    pub error: f64,
    pub tolerance: f64,
}

impl ReplayArtifact {
    pub fn load(path: &Path) -> Result<Self> {
        super::config::parse_json(&std::fs::read_to_string(path)?, &path.display().to_string())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    fn sign(&self) -> HaarSign {
        if self.flipped_sign {
            HaarSign::Flipped
        } else {
            HaarSign::Standard
        }
    }
}

#[derive(Debug, Clone)]
pub struct Failure {
    pub artifact: ReplayArtifact,
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub suite: Suite,
    pub checks: u64,
    pub max_error: f64,
    pub failure: Option<Failure>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub suites: Vec<SuiteReport>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(SuiteReport::passed)
    }
}

fn grid_of(levels: &[usize]) -> Result<MultiGrid> {
    MultiGrid::new(levels.to_vec())
}

fn rect(heaps: &[usize]) -> DyadicRectangle {
    DyadicRectangle::new(heaps.iter().enumerate().map(|(a, &h)| DyadicInterval::from_heap(a, h)).collect()).expect("distinct axes")
}

fn function(grid: &MultiGrid, data: &[f64]) -> Result<GridFunction> {
    GridFunction::new(grid.clone(), data.to_vec())
}

fn relative(x: f64, reference: f64) -> f64 {
    if reference != 0.0 {
        (x - reference).abs() / reference.abs()
    } else {
        x.abs()
    }
}

fn check_haar_pair(grid: &MultiGrid, a: &[usize], b: &[usize]) -> Result<f64> {
    let ip = inner_product(&haar_function(grid, &rect(a))?, &haar_function(grid, &rect(b))?)?;
    Ok((ip - if a == b { 1.0 } else { 0.0 }).abs())
}

fn check_function(f: &GridFunction) -> Result<f64> {
    let grid = f.grid();
    let all = ParamSubset::all(grid);
    let coeffs = haar::haar_transform(f, &all)?;
    let round = haar::inverse_transform(&coeffs).relative_diff(f)?;
    let energy: f64 = coeffs.data().iter().map(|c| c * c).sum();
    let parseval = relative(energy, inner_product(f, f)?);
    let m = grid.m();
    let mut total = GridFunction::zeros(grid);
    for mask in 0..1usize << m {
        let active: Vec<usize> = (0..m).filter(|a| mask >> a & 1 == 1).collect();
        let rest = grid.complement(&active);
        let g = if rest.is_empty() {
            f.clone()
        } else {
            let top = DyadicRectangle::whole(&rest)?;
            if active.is_empty() {
                GridFunction::constant(grid, average(f, &top)?)
            } else {
                partial_average(f, &top)?.broadcast(&active, grid)?
            }
        };
        if active.is_empty() {
            total.add_assign_unchecked(&g, 1.0);
            continue;
        }
        let sub = grid.sub_grid(&active)?;
        let mut heaps = vec![1usize; active.len()];
        loop {
            let r = DyadicRectangle::new(active.iter().zip(&heaps).map(|(&a, &h)| DyadicInterval::from_heap(a, h)).collect())?;
            total.add_assign_unchecked(&martingale_diff(&g, &r)?, 1.0);
            let mut t = 0;
            loop {
                heaps[t] += 1;
                if heaps[t] < sub.axis_len(t) {
                    break;
                }
                heaps[t] = 1;
                t += 1;
                if t == heaps.len() {
                    break;
                }
            }
            if t == heaps.len() {
                break;
            }
        }
    }
    let completeness = total.relative_diff(f)?;
    Ok(round.max(parseval).max(completeness))
}

fn check_expansion(b: &GridFunction, f: &GridFunction, axes: &[usize]) -> Result<f64> {
    let mut sum = GridFunction::zeros(b.grid());
    for t in product_expansion(b, f, &ParamSubset::new(axes.to_vec())?)? {
        sum.add_assign_unchecked(&t.value, 1.0);
    }
    sum.relative_diff(&b.mul(f)?)
}

fn check_triple(phi: &GridFunction, i: &[usize], j: &[usize], k: &[usize], sign: HaarSign) -> Result<f64> {
    let (ri, rj, rk) = (rect(i), rect(j), rect(k));
    let axes: Vec<usize> = (0..phi.grid().m()).collect();
    let terms = TelescopeEvaluator::with_sign(phi, &axes, sign)?.terms(&ri, &rj, &rk)?;
    let sum: f64 = terms.iter().map(|t| t.value).sum();
    Ok((sum - (average(phi, &rj)? - average(phi, &ri)?)).abs())
}

fn sup(g: &GridFunction) -> f64 {
    g.data().iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn build_operators(files: &[OperatorFile]) -> Result<Vec<OperatorSpec>> {
    files.iter().map(OperatorFile::build).collect()
}

fn check_commutator(ops: Vec<OperatorSpec>, b: GridFunction, f: &GridFunction, telescoped: bool, sign: HaarSign) -> Result<f64> {
    let c = CommutatorSpec::new(ops, b)?;
    let direct = commutator_apply(&c, f)?;
    let mut sum = GridFunction::zeros(c.grid());
    for t in commutator_expand(&c, f)? {
        sum.add_assign_unchecked(&t.value, 1.0);
    }
    let mut err = sum.relative_diff(&direct)?;
    if telescoped {
        let brute = illegal_group(&c, f)?;
        err = match telescoped_illegal_group(&c, f, sign) {
            Ok(t) => {
                let scale = sup(&brute).max(sup(&direct));
                let diff = sup(&t.value.sub(&brute)?);
                err.max(if scale > 0.0 { diff / scale } else { diff })
            }
            Err(Error::ShapeMismatch(_)) => f64::INFINITY,
            Err(e) => return Err(e),
        };
    }
    Ok(err)
}

/// Recomputes the recorded error of an artifact.
pub fn replay(a: &ReplayArtifact) -> Result<f64> {
    let grid = grid_of(&a.levels)?;
    let input = |n: usize| -> Result<GridFunction> {
        let data = a.inputs.get(n).ok_or_else(|| Error::Format(format!("artifact lacks input {n}")))?;
        function(&grid, data)
    };
    match &a.case {
        Case::HaarPair { a: x, b: y } => check_haar_pair(&grid, x, y),
        Case::Function => check_function(&input(0)?),
        Case::Expansion { axes } => check_expansion(&input(0)?, &input(1)?, axes),
        Case::Triple { i, j, k } => check_triple(&input(0)?, i, j, k, a.sign()),
        Case::Commutator { operators, telescoped } => {
            check_commutator(build_operators(operators)?, input(0)?, &input(1)?, *telescoped, a.sign())
        }
    }
}

struct Runner<'a> {
    opts: &'a VerifyOptions,
    suite: Suite,
    checks: u64,
    max_error: f64,
}

impl Runner<'_> {
    /// Records one measured error; returns the artifact on violation.
    fn record(&mut self, levels: &[usize], seed: u64, case: impl FnOnce() -> (Case, Vec<Vec<f64>>), error: f64) -> Option<ReplayArtifact> {
        self.checks += 1;
        if error.is_nan() || error > self.suite.tolerance() {
            self.max_error = f64::INFINITY.min(if error.is_nan() { f64::INFINITY } else { error }).max(self.max_error);
            let (case, inputs) = case();
            return Some(ReplayArtifact {
                version: 1,
                suite: self.suite,
                levels: levels.to_vec(),
                seed,
                flipped_sign: self.opts.haar_sign == HaarSign::Flipped,
                case,
                inputs,
                error,
                tolerance: self.suite.tolerance(),
            });
        }
        self.max_error = self.max_error.max(error);
        None
    }
}

fn all_heaps(grid: &MultiGrid) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for a in 0..grid.m() {
        out = out
            .into_iter()
            .flat_map(|p: Vec<usize>| {
                (1..grid.axis_len(a)).map(move |h| {
                    let mut v = p.clone();
                    v.push(h);
                    v
                })
            })
            .collect();
    }
    out
}

fn run_orthonormality(r: &mut Runner, levels: &[usize]) -> Result<Option<ReplayArtifact>> {
    let grid = grid_of(levels)?;
    let heaps = all_heaps(&grid);
    let n = heaps.len();
    if n * n <= EXHAUSTIVE_PAIRS {
        let funcs: Vec<GridFunction> = heaps.iter().map(|h| haar_function(&grid, &rect(h))).collect::<Result<_>>()?;
        for x in 0..n {
            for y in x..n {
                let ip = inner_product(&funcs[x], &funcs[y])?;
                let err = (ip - if x == y { 1.0 } else { 0.0 }).abs();
                let case = || (Case::HaarPair { a: heaps[x].clone(), b: heaps[y].clone() }, Vec::new());
                if let Some(a) = r.record(levels, 0, case, err) {
                    return Ok(Some(a));
                }
            }
        }
        return Ok(None);
    }
    let seed = derive_seed(r.opts.seed, 0x0a);
    let mut rng = SplitMix64::new(seed);
    let pairs = (0..n).map(|x| (x, x)).chain((0..SAMPLED_PAIRS).map(|_| (rng.below(n), rng.below(n))));
    for (x, y) in pairs.collect::<Vec<_>>() {
        let err = check_haar_pair(&grid, &heaps[x], &heaps[y])?;
        let case = || (Case::HaarPair { a: heaps[x].clone(), b: heaps[y].clone() }, Vec::new());
        if let Some(a) = r.record(levels, seed, case, err) {
            return Ok(Some(a));
        }
    }
    Ok(None)
}

fn run_parseval(r: &mut Runner, levels: &[usize]) -> Result<Option<ReplayArtifact>> {
    let grid = grid_of(levels)?;
    for s in 0..3 {
        let seed = derive_seed(r.opts.seed, 0x100 + s);
        let f = random_function(&grid, seed);
        let err = check_function(&f)?;
        if let Some(a) = r.record(levels, seed, || (Case::Function, vec![f.data().to_vec()]), err) {
            return Ok(Some(a));
        }
    }
    Ok(None)
}

fn run_expansion(r: &mut Runner, levels: &[usize]) -> Result<Option<ReplayArtifact>> {
    let grid = grid_of(levels)?;
    let m = grid.m();
    for mask in 1..1usize << m {
        let axes: Vec<usize> = (0..m).filter(|a| mask >> a & 1 == 1).collect();
        for s in 0..2 {
            let seed = derive_seed(r.opts.seed, 0x200 + 8 * mask as u64 + s);
            let (b, f) = (random_function(&grid, derive_seed(seed, 1)), random_function(&grid, derive_seed(seed, 2)));
            let err = check_expansion(&b, &f, &axes)?;
            let case = || (Case::Expansion { axes: axes.clone() }, vec![b.data().to_vec(), f.data().to_vec()]);
            if let Some(a) = r.record(levels, seed, case, err) {
                return Ok(Some(a));
            }
        }
    }
    Ok(None)
}

/// Per axis: every `(K, I, J)` heap triple with `I, J ⊆ K`, intervals of any level.
fn axis_triples(n: usize) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for k in 1..(2usize << n) {
        let kl = crate::kernels::heap_level(k);
        let subs: Vec<usize> = (0..=n - kl).flat_map(|d| (k << d)..((k + 1) << d)).collect();
        for &i in &subs {
            for &j in &subs {
                out.push((k, i, j));
            }
        }
    }
    out
}

/// Box sums through a summed-area table, independent of the Haar machinery.
struct BoxSums {
    dims: Vec<usize>,
    strides: Vec<usize>,
    table: Vec<f64>,
}

impl BoxSums {
    fn new(f: &GridFunction) -> Self {
        let dims: Vec<usize> = f.grid().dims().iter().map(|d| d + 1).collect();
        let m = dims.len();
        let mut strides = vec![1usize; m];
        for a in (0..m - 1).rev() {
            strides[a] = strides[a + 1] * dims[a + 1];
        }
        let mut table = vec![0.0; dims.iter().product()];
        for (flat, &v) in f.data().iter().enumerate() {
            let idx = f.grid().unflatten(flat);
            let t: usize = idx.iter().zip(&strides).map(|(i, s)| (i + 1) * s).sum();
            table[t] = v;
        }
        for a in 0..m {
            for t in 0..table.len() {
                if (t / strides[a]) % dims[a] > 0 {
                    table[t] += table[t - strides[a]];
                }
            }
        }
        Self { dims, strides, table }
    }

    fn mean(&self, heaps: &[usize], levels: &[usize]) -> f64 {
        let m = self.dims.len();
        let bounds: Vec<(usize, usize, usize)> = heaps
            .iter()
            .zip(levels)
            .map(|(&h, &n)| {
                let l = crate::kernels::heap_level(h);
                let width = 1usize << (n - l);
                let lo = (h - (1 << l)) * width;
                (lo, lo + width, width)
            })
            .collect();
        let mut sum = 0.0;
        for corner in 0..1usize << m {
            let mut t = 0;
            let mut sign = 1.0;
            for (a, &(lo, hi, _)) in bounds.iter().enumerate() {
                if corner >> a & 1 == 1 {
                    t += lo * self.strides[a];
                    sign = -sign;
                } else {
                    t += hi * self.strides[a];
                }
            }
            sum += sign * self.table[t];
        }
        sum / bounds.iter().map(|b| b.2 as f64).product::<f64>()
    }
}

fn run_telescoping(r: &mut Runner, levels: &[usize]) -> Result<Option<ReplayArtifact>> {
    let grid = grid_of(levels)?;
    let m = grid.m();
    let seed = derive_seed(r.opts.seed, 0x300 + levels.iter().sum::<usize>() as u64 * 8 + m as u64);
    let phi = random_function(&grid, seed);
    let axes: Vec<usize> = (0..m).collect();
    let eval = TelescopeEvaluator::with_sign(&phi, &axes, r.opts.haar_sign)?;
    let sums = BoxSums::new(&phi);
    let per_axis: Vec<Vec<(usize, usize, usize)>> = levels.iter().map(|&n| axis_triples(n)).collect();
    let total: u64 = per_axis.iter().map(|t| t.len() as u64).product();
    let check = |r: &mut Runner, pick: &[(usize, usize, usize)]| -> Result<Option<ReplayArtifact>> {
        let k: Vec<usize> = pick.iter().map(|t| t.0).collect();
        let i: Vec<usize> = pick.iter().map(|t| t.1).collect();
        let j: Vec<usize> = pick.iter().map(|t| t.2).collect();
        let terms = eval.terms(&rect(&i), &rect(&j), &rect(&k))?;
        let sum: f64 = terms.iter().map(|t| t.value).sum();
        let err = (sum - (sums.mean(&j, levels) - sums.mean(&i, levels))).abs();
        let case = || (Case::Triple { i: i.clone(), j: j.clone(), k: k.clone() }, vec![phi.data().to_vec()]);
        Ok(r.record(levels, seed, case, err))
    };
    if total <= EXHAUSTIVE_TRIPLES {
        let mut idx = vec![0usize; m];
        loop {
            let pick: Vec<_> = (0..m).map(|a| per_axis[a][idx[a]]).collect();
            if let Some(a) = check(r, &pick)? {
                return Ok(Some(a));
            }
            let mut t = m;
            loop {
                if t == 0 {
                    return Ok(None);
                }
                t -= 1;
                idx[t] += 1;
                if idx[t] < per_axis[t].len() {
                    break;
                }
                idx[t] = 0;
            }
        }
    }
    let level = crate::kernels::heap_level;
    let strata: Vec<Vec<Vec<(usize, usize, usize)>>> = per_axis
        .iter()
        .zip(levels)
        .map(|(triples, &n)| {
            let mut by = vec![Vec::new(); (n + 1).pow(3)];
            for &t in triples {
                by[(level(t.0) * (n + 1) + level(t.1)) * (n + 1) + level(t.2)].push(t);
            }
            by.into_iter().filter(|s| !s.is_empty()).collect()
        })
        .collect();
    let mut rng = SplitMix64::new(derive_seed(seed, 1));
    let mut idx = vec![0usize; m];
    loop {
        for _ in 0..STRATUM_SAMPLES {
            let pick: Vec<_> = (0..m)
                .map(|a| {
                    let s = &strata[a][idx[a]];
                    s[rng.below(s.len())]
                })
                .collect();
            if let Some(a) = check(r, &pick)? {
                return Ok(Some(a));
            }
        }
        let mut t = m;
        loop {
            if t == 0 {
                return Ok(None);
            }
            t -= 1;
            idx[t] += 1;
            if idx[t] < strata[t].len() {
                break;
            }
            idx[t] = 0;
        }
    }
}

/// Operator line-ups for one grid: shift-only commutators with `k ≤ m`, and on
/// three axes every shift/paraproduct pair.
fn commutator_lineups(grid: &MultiGrid, seed: u64) -> Result<Vec<Vec<OperatorSpec>>> {
    let m = grid.m();
    let cx = |a: usize| -> (usize, usize) {
        let options = [(1, 0), (0, 1), (1, 1)];
        let (k, l) = options[a % 3];
        let cap = grid.level(a) - 1;
        (k.min(cap), l.min(cap))
    };
    let shift = |axes: Vec<usize>, s: u64| -> Result<OperatorSpec> {
        let c: Vec<_> = axes.iter().map(|&a| cx(a)).collect();
        Ok(OperatorSpec::Shift(gen_shift(derive_seed(seed, s), grid, &ParamSubset::new(axes)?, &c, 1.0)?))
    };
    let mut out = vec![vec![shift((0..m).collect(), 1)?]];
    if m >= 2 {
        out.push((0..m).map(|a| shift(vec![a], 10 + a as u64)).collect::<Result<_>>()?);
        if m == 3 {
            out.push(vec![shift(vec![0, 1], 20)?, shift(vec![2], 21)?]);
        }
    }
    if m == 3 {
        let partial = OperatorSpec::PartialParaproduct(gen_partial(derive_seed(seed, 30), grid, 1, 2, cx(1), 1.0)?);
        let partial_rev = OperatorSpec::PartialParaproduct(gen_partial(derive_seed(seed, 31), grid, 1, 0, cx(1), 1.0)?.adjoint());
        out.push(vec![shift(vec![0], 32)?, partial]);
        out.push(vec![partial_rev, shift(vec![2], 33)?]);
        for (n, flavor) in FullFlavor::ALL.into_iter().enumerate() {
            let full = OperatorSpec::FullParaproduct(gen_full(derive_seed(seed, 40 + n as u64), grid, [1, 2], flavor, 1.0)?);
            if n % 2 == 0 {
                out.push(vec![shift(vec![0], 50 + n as u64)?, full]);
            } else {
                let full = OperatorSpec::FullParaproduct(gen_full(derive_seed(seed, 40 + n as u64), grid, [0, 1], flavor, 1.0)?);
                out.push(vec![full, shift(vec![2], 50 + n as u64)?]);
            }
        }
    }
    Ok(out)
}

fn run_commutator(r: &mut Runner, levels: &[usize]) -> Result<Option<ReplayArtifact>> {
    let grid = grid_of(levels)?;
    let seed = derive_seed(r.opts.seed, 0x400 + 8 * levels.iter().sum::<usize>() as u64 + grid.m() as u64);
    for (n, ops) in commutator_lineups(&grid, seed)?.into_iter().enumerate() {
        let b = random_function(&grid, derive_seed(seed, 100 + n as u64));
        let f = random_function(&grid, derive_seed(seed, 200 + n as u64));
        let telescoped = ops.iter().all(OperatorSpec::is_paraproduct_free);
        let files: Vec<OperatorFile> = ops.iter().map(OperatorFile::from_spec).collect();
        let err = check_commutator(ops, b.clone(), &f, telescoped, r.opts.haar_sign)?;
        let case = || (Case::Commutator { operators: files.clone(), telescoped }, vec![b.data().to_vec(), f.data().to_vec()]);
        if let Some(a) = r.record(levels, seed, case, err) {
            return Ok(Some(a));
        }
    }
    Ok(None)
}

/// Runs the selected suites in order and stops at the first violation.
pub fn run_verify(opts: &VerifyOptions) -> Result<VerifyReport> {
    let mut suites = Vec::new();
    for &suite in &opts.suites {
        let mut runner = Runner { opts, suite, checks: 0, max_error: 0.0 };
        let mut failure = None;
        for levels in &opts.grids {
            let found = match suite {
                Suite::Orthonormality => run_orthonormality(&mut runner, levels)?,
                Suite::Parseval => run_parseval(&mut runner, levels)?,
                Suite::Expansion => run_expansion(&mut runner, levels)?,
                Suite::Telescoping => run_telescoping(&mut runner, levels)?,
                Suite::Commutator => run_commutator(&mut runner, levels)?,
            };
            if let Some(artifact) = found {
                let path = match &opts.artifact_dir {
                    Some(dir) => {
                        let name = format!("{}-{}-{}.json", suite.name(), levels.iter().map(|l| l.to_string()).collect::<Vec<_>>().join("x"), artifact.seed);
                        let p = dir.join(name);
                        artifact.save(&p)?;
                        Some(p)
                    }
                    None => None,
                };
                failure = Some(Failure { artifact, path });
                break;
            }
        }
        let stop = failure.is_some();
        suites.push(SuiteReport { suite, checks: runner.checks, max_error: runner.max_error, failure });
        if stop {
            break;
        }
    }
    Ok(VerifyReport { suites })
}
