//! Brute-force reference implementations written against raw row-major
//! arrays. They enumerate rectangles and cells directly and share no code with
//! the library beyond the data layout.
#![allow(dead_code)]

use dyadic_core::rng::SplitMix64;
use dyadic_core::{GridFunction, MultiGrid};

/// Half-open cell range `[lo, hi)` on one axis together with its level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub lo: usize,
    pub hi: usize,
    pub level: usize,
}

impl Span {
    pub fn contains(&self, other: &Span) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }
}

pub fn axis_spans(n: usize) -> Vec<Span> {
    let mut out = Vec::new();
    for level in 0..=n {
        let width = 1 << (n - level);
        for p in 0..1 << level {
            out.push(Span { lo: p * width, hi: (p + 1) * width, level });
        }
    }
    out
}

pub fn rectangles(levels: &[usize]) -> Vec<Vec<Span>> {
    let mut out = vec![Vec::new()];
    for &n in levels {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<Span>| {
                axis_spans(n).into_iter().map(move |s| {
                    let mut v = prefix.clone();
                    v.push(s);
                    v
                })
            })
            .collect();
    }
    out
}

pub fn flat(levels: &[usize], idx: &[usize]) -> usize {
    idx.iter().zip(levels).fold(0, |acc, (&i, &n)| (acc << n) | i)
}

pub fn cells(spans: &[Span]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for s in spans {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<usize>| {
                (s.lo..s.hi).map(move |i| {
                    let mut v = prefix.clone();
                    v.push(i);
                    v
                })
            })
            .collect();
    }
    out
}

pub fn total_cells(levels: &[usize]) -> usize {
    1 << levels.iter().sum::<usize>()
}

pub fn mean(levels: &[usize], data: &[f64], spans: &[Span]) -> f64 {
    let cs = cells(spans);
    cs.iter().map(|c| data[flat(levels, c)]).sum::<f64>() / cs.len() as f64
}

/// Volume of a box in the unit cube.
pub fn volume(levels: &[usize], spans: &[Span]) -> f64 {
    spans.iter().zip(levels).map(|(s, &n)| (s.hi - s.lo) as f64 / (1u64 << n) as f64).product()
}

/// `⟨f, h_R⟩` in `L²([0,1)^m)` for a fully cancellative rectangle.
pub fn haar_coefficient(levels: &[usize], data: &[f64], spans: &[Span]) -> f64 {
    let vol = 1.0 / total_cells(levels) as f64;
    let norm = volume(levels, spans).sqrt();
    cells(spans)
        .iter()
        .map(|c| {
            let sign: f64 = c.iter().zip(spans).map(|(&i, s)| if i < (s.lo + s.hi) / 2 { 1.0 } else { -1.0 }).product();
            sign * data[flat(levels, c)]
        })
        .sum::<f64>()
        * vol
        / norm
}

pub fn lp_norm(data: &[f64], w: &[f64], p: f64, levels: &[usize]) -> f64 {
    let vol = 1.0 / total_cells(levels) as f64;
    data.iter().zip(w).map(|(x, w)| x.abs().powf(p) * w * vol).sum::<f64>().powf(1.0 / p)
}

pub fn ap_constant(levels: &[usize], w: &[f64], p: f64) -> f64 {
    let q = p / (p - 1.0);
    let sigma: Vec<f64> = w.iter().map(|x| x.powf(1.0 - q)).collect();
    rectangles(levels)
        .iter()
        .map(|r| mean(levels, w, r) * mean(levels, &sigma, r).powf(p - 1.0))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Every finest-cell slice fixing all axes except `axes`: returns the
/// complementary cell index lists with `usize::MAX` on the free axes.
pub fn slices(levels: &[usize], axes: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for (a, &n) in levels.iter().enumerate() {
        let options: Vec<usize> = if axes.contains(&a) { vec![usize::MAX] } else { (0..1 << n).collect() };
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<usize>| {
                options.iter().map(move |&i| {
                    let mut v = prefix.clone();
                    v.push(i);
                    v
                })
            })
            .collect();
    }
    out
}

/// Restriction of `data` to one slice, as a function on the free axes.
pub fn restrict(levels: &[usize], data: &[f64], fixed: &[usize], axes: &[usize]) -> (Vec<usize>, Vec<f64>) {
    let sub: Vec<usize> = axes.iter().map(|&a| levels[a]).collect();
    let full: Vec<Span> = sub.iter().map(|&n| Span { lo: 0, hi: 1 << n, level: 0 }).collect();
    let values = cells(&full)
        .iter()
        .map(|c| {
            let mut idx = fixed.to_vec();
            for (k, &a) in axes.iter().enumerate() {
                idx[a] = c[k];
            }
            data[flat(levels, &idx)]
        })
        .collect();
    (sub, values)
}

pub fn ainf_constant(levels: &[usize], w: &[f64], axis: usize) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for fixed in slices(levels, &[axis]) {
        let (sub, values) = restrict(levels, w, &fixed, &[axis]);
        let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
        for s in axis_spans(sub[0]) {
            best = best.max(mean(&sub, &values, &[s]) * (-mean(&sub, &logs, &[s])).exp());
        }
    }
    best
}

pub fn slice_ap_constant(levels: &[usize], w: &[f64], p: f64, axis: usize) -> f64 {
    slices(levels, &[axis])
        .iter()
        .map(|fixed| {
            let (sub, values) = restrict(levels, w, fixed, &[axis]);
            ap_constant(&sub, &values, p)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn cancellative(levels: &[usize]) -> Vec<Vec<Span>> {
    rectangles(levels).into_iter().filter(|r| r.iter().zip(levels).all(|(s, &n)| s.level < n)).collect()
}

/// Weighted Carleson sum over the cells marked in `mask`.
fn carleson(levels: &[usize], coeffs: &[(Vec<Span>, f64)], nu: &[f64], mask: &[bool]) -> f64 {
    let vol = 1.0 / total_cells(levels) as f64;
    let nu_omega: f64 = nu.iter().zip(mask).filter(|(_, &m)| m).map(|(w, _)| w * vol).sum();
    let sum: f64 = coeffs
        .iter()
        .filter(|(r, _)| cells(r).iter().all(|c| mask[flat(levels, c)]))
        .map(|(r, c)| c * c / mean(levels, nu, r))
        .sum();
    sum / nu_omega
}

fn mask_of(levels: &[usize], rects: &[&Vec<Span>]) -> Vec<bool> {
    let mut mask = vec![false; total_cells(levels)];
    for r in rects {
        for c in cells(r) {
            mask[flat(levels, &c)] = true;
        }
    }
    mask
}

/// Product BMO on every axis: supremum over dyadic rectangles, and over
/// unions of up to `pieces` pairwise non-nested rectangles when `pieces ≥ 2`.
pub fn product_bmo(levels: &[usize], b: &[f64], nu: &[f64], pieces: usize) -> f64 {
    let coeffs: Vec<(Vec<Span>, f64)> = cancellative(levels).into_iter().map(|r| {
        let c = haar_coefficient(levels, b, &r);
        (r, c)
    }).collect();
    let rects = rectangles(levels);
    let mut best: f64 = 0.0;
    for r in &rects {
        best = best.max(carleson(levels, &coeffs, nu, &mask_of(levels, &[r])));
    }
    if pieces >= 2 {
        let nested = |x: &Vec<Span>, y: &Vec<Span>| x.iter().zip(y).all(|(a, b)| a.contains(b)) || x.iter().zip(y).all(|(a, b)| b.contains(a));
        let n = rects.len();
        for i in 0..n {
            for j in i + 1..n {
                if nested(&rects[i], &rects[j]) {
                    continue;
                }
                best = best.max(carleson(levels, &coeffs, nu, &mask_of(levels, &[&rects[i], &rects[j]])));
                if pieces >= 3 {
                    for k in j + 1..n {
                        if nested(&rects[i], &rects[k]) || nested(&rects[j], &rects[k]) {
                            continue;
                        }
                        best = best.max(carleson(levels, &coeffs, nu, &mask_of(levels, &[&rects[i], &rects[j], &rects[k]])));
                    }
                }
            }
        }
    }
    best.sqrt()
}

/// `BMO^v`: rectangle-family product BMO of every slice on the free axes `v`.
pub fn bmo_v(levels: &[usize], b: &[f64], nu: &[f64], v: &[usize]) -> f64 {
    slices(levels, v)
        .iter()
        .map(|fixed| {
            let (sub, bs) = restrict(levels, b, fixed, v);
            let (_, ns) = restrict(levels, nu, fixed, v);
            product_bmo(&sub, &bs, &ns, 1)
        })
        .fold(0.0, f64::max)
}

pub fn little_bmo(levels: &[usize], b: &[f64], nu: &[f64]) -> f64 {
    let vol = 1.0 / total_cells(levels) as f64;
    rectangles(levels)
        .iter()
        .map(|r| {
            let avg = mean(levels, b, r);
            let cs = cells(r);
            let osc: f64 = cs.iter().map(|c| (b[flat(levels, c)] - avg).abs() * vol).sum();
            let weight: f64 = cs.iter().map(|c| nu[flat(levels, c)] * vol).sum();
            osc / weight
        })
        .fold(0.0, f64::max)
}

/// Strong maximal function on axes `v`, other axes frozen at the point.
pub fn maximal(levels: &[usize], f: &[f64], v: &[usize]) -> Vec<f64> {
    let abs: Vec<f64> = f.iter().map(|x| x.abs()).collect();
    let all: Vec<Span> = levels.iter().map(|&n| Span { lo: 0, hi: 1 << n, level: 0 }).collect();
    cells(&all)
        .iter()
        .map(|x| {
            let mut choices = vec![Vec::new()];
            for (a, &n) in levels.iter().enumerate() {
                let options: Vec<Span> = if v.contains(&a) {
                    axis_spans(n).into_iter().filter(|s| s.lo <= x[a] && x[a] < s.hi).collect()
                } else {
                    vec![Span { lo: x[a], hi: x[a] + 1, level: n }]
                };
                choices = choices
                    .into_iter()
                    .flat_map(|prefix: Vec<Span>| {
                        options.iter().map(move |s| {
                            let mut p = prefix.clone();
                            p.push(*s);
                            p
                        })
                    })
                    .collect();
            }
            choices.iter().map(|r| mean(levels, &abs, r)).fold(0.0, f64::max)
        })
        .collect()
}

pub fn rel_err(x: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        x.abs()
    } else {
        (x - reference).abs() / reference.abs()
    }
}

/// Random grid with at most 64 cells and at most two axes.
pub fn random_levels(rng: &mut SplitMix64) -> Vec<usize> {
    if rng.coin() {
        vec![1 + rng.below(6)]
    } else {
        vec![1 + rng.below(3), 1 + rng.below(3)]
    }
}

pub fn random_values(rng: &mut SplitMix64, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.uniform(lo, hi)).collect()
}

/// Positive weight with occasional large jumps.
pub fn random_weight(rng: &mut SplitMix64, n: usize) -> Vec<f64> {
    (0..n).map(|_| if rng.below(5) == 0 { rng.uniform(5.0, 20.0) } else { rng.uniform(0.1, 2.0) }).collect()
}

pub fn function(levels: &[usize], data: Vec<f64>) -> GridFunction {
    GridFunction::new(MultiGrid::new(levels.to_vec()).unwrap(), data).unwrap()
}

use dyadic_core::bmo::{bmo_v_norm, little_bmo_norm, product_bmo_norm};
use dyadic_core::grid::lp_norm as lib_lp_norm;
use dyadic_core::ops::maximal as lib_maximal;
use dyadic_core::weights::{ainf_constant as lib_ainf, ap_constant as lib_ap, slice_ap_constant as lib_slice_ap};
use dyadic_core::{ParamSubset, TestFamily, Weight};

pub const ORACLE_INSTANCES: usize = 200;
pub const ORACLE_TOLERANCE: f64 = 1e-12;

fn weight(levels: &[usize], data: Vec<f64>) -> Weight {
    Weight::new(function(levels, data)).unwrap()
}

/// Largest relative error between library and oracle over seeded instances,
/// one entry per functional.
pub fn oracle_errors(instances: usize, seed: u64) -> Vec<(&'static str, f64)> {
    let mut rng = SplitMix64::new(seed);
    let mut worst = vec![
        ("lp_norm", 0.0f64),
        ("ap_constant", 0.0),
        ("slice_ap_constant", 0.0),
        ("ainf_constant", 0.0),
        ("product_bmo_norm", 0.0),
        ("product_bmo_norm_unions", 0.0),
        ("little_bmo_norm", 0.0),
        ("bmo_v_norm", 0.0),
        ("maximal", 0.0),
    ];
    let mut bump = |name: &str, e: f64| {
        let slot = worst.iter_mut().find(|(n, _)| *n == name).unwrap();
        slot.1 = slot.1.max(if e.is_nan() { f64::INFINITY } else { e });
    };
    for _ in 0..instances {
        let levels = random_levels(&mut rng);
        let n = total_cells(&levels);
        let m = levels.len();
        let b = random_values(&mut rng, n, -1.0, 1.0);
        let w = random_weight(&mut rng, n);
        let p = [1.5, 2.0, 3.0, 1.2][rng.below(4)];
        let bf = function(&levels, b.clone());
        let wf = weight(&levels, w.clone());

        bump("lp_norm", rel_err(lib_lp_norm(&bf, p, wf.values()).unwrap(), lp_norm(&b, &w, p, &levels)));
        bump("ap_constant", rel_err(lib_ap(&wf, p).unwrap(), ap_constant(&levels, &w, p)));
        let axis = rng.below(m);
        bump("slice_ap_constant", rel_err(lib_slice_ap(&wf, p, axis).unwrap(), slice_ap_constant(&levels, &w, p, axis)));
        bump("ainf_constant", rel_err(lib_ainf(&wf, axis).unwrap(), ainf_constant(&levels, &w, axis)));
        let all = ParamSubset::all(bf.grid());
        bump(
            "product_bmo_norm",
            rel_err(product_bmo_norm(&bf, &wf, &all, TestFamily::Rectangles).unwrap(), product_bmo(&levels, &b, &w, 1)),
        );
        bump("little_bmo_norm", rel_err(little_bmo_norm(&bf, &wf).unwrap(), little_bmo(&levels, &b, &w)));
        let v: Vec<usize> = if m == 1 || rng.coin() { (0..m).collect() } else { vec![rng.below(m)] };
        bump(
            "bmo_v_norm",
            rel_err(bmo_v_norm(&bf, &wf, &ParamSubset::new(v.clone()).unwrap()).unwrap(), bmo_v(&levels, &b, &w, &v)),
        );
        let v: Vec<usize> = if m == 1 || rng.coin() { (0..m).collect() } else { vec![rng.below(m)] };
        let lib = lib_maximal(&bf, &ParamSubset::new(v.clone()).unwrap()).unwrap();
        let oracle = maximal(&levels, &b, &v);
        let scale = oracle.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let diff = lib.data().iter().zip(&oracle).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        bump("maximal", diff / scale);

        let small: Vec<usize> = if rng.coin() { vec![2, 2] } else { vec![1 + rng.below(2), 2] };
        let sn = total_cells(&small);
        let sb = random_values(&mut rng, sn, -1.0, 1.0);
        let sw = random_weight(&mut rng, sn);
        let (sbf, swf) = (function(&small, sb.clone()), weight(&small, sw.clone()));
        let lib = product_bmo_norm(&sbf, &swf, &ParamSubset::all(sbf.grid()), TestFamily::with_unions()).unwrap();
        bump("product_bmo_norm_unions", rel_err(lib, product_bmo(&small, &sb, &sw, TestFamily::DEFAULT_UNION_PIECES)));
    }
    worst
}
