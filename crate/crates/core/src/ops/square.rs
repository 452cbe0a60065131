use crate::error::Result;
use crate::grid::{lp_norm, GridFunction};
use crate::haar::{self, ParamSubset};
use crate::kernels;
use crate::weights::Weight;

/// Pointwise `S^v f = (Σ_{I_v} |Δ_{I_v} f|²)^{1/2}` and its `L^p(w)` norm.
pub fn square_function(f: &GridFunction, v: &ParamSubset, w: &Weight, p: f64) -> Result<(GridFunction, f64)> {
    if v.is_empty() {
        return Err(crate::Error::EmptySubset);
    }
    v.check_in(f.grid())?;
    let axes = v.sorted();
    let dims = f.grid().dims();
    let mut t: Vec<f64> = haar::forward_axes(f.data(), &dims, &axes).into_iter().map(|c| c * c).collect();
    for &a in &axes {
        t = kernels::map_axis(&t, &dims, a, dims[a], |x, o| {
            let scaled: Vec<f64> = x
                .iter()
                .enumerate()
                .map(|(h, &c)| if h == 0 { 0.0 } else { c * (1usize << kernels::heap_level(h)) as f64 })
                .collect();
            kernels::chain_sum_cancellative(&scaled, o);
        });
    }
    let s = GridFunction::new(f.grid().clone(), t.into_iter().map(f64::sqrt).collect())?;
    let norm = lp_norm(&s, p, w.values())?;
    Ok((s, norm))
}

/// Strong dyadic maximal function over rectangles on the axes of `v`.
pub fn maximal(f: &GridFunction, v: &ParamSubset) -> Result<GridFunction> {
    if v.is_empty() {
        return Err(crate::Error::EmptySubset);
    }
    v.check_in(f.grid())?;
    let axes = v.sorted();
    let abs: Vec<f64> = f.data().iter().map(|x| x.abs()).collect();
    let (mut d, mut t) = kernels::pyramid_axes(&abs, &f.grid().dims(), &axes);
    for &a in &axes {
        t = kernels::map_axis(&t, &d, a, d[a] / 2, kernels::chain_max);
        d[a] /= 2;
    }
    Ok(GridFunction::from_parts(f.grid().clone(), t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{DyadicInterval, DyadicRectangle, MultiGrid};
    use crate::haar::haar_function;

    #[test]
    fn constant_has_zero_square_function() {
        let g = MultiGrid::new(vec![3, 2]).unwrap();
        let (s, n) = square_function(&GridFunction::constant(&g, 2.0), &ParamSubset::all(&g), &Weight::unit(&g), 2.0).unwrap();
        assert!(s.max_abs() < 1e-14 && n < 1e-14);
    }

    #[test]
    fn single_haar_square_function_is_its_modulus() {
        let g = MultiGrid::new(vec![3, 1]).unwrap();
        let r = DyadicRectangle::new(vec![DyadicInterval::new(0, 1, 0).unwrap()]).unwrap();
        let h = haar_function(&g, &r).unwrap();
        let (s, _) = square_function(&h, &ParamSubset::new(vec![0]).unwrap(), &Weight::unit(&g), 2.0).unwrap();
        assert!(s.max_abs_diff(&h.map(f64::abs)).unwrap() < 1e-14);
    }

    #[test]
    fn maximal_of_half_indicator() {
        let g = MultiGrid::new(vec![2]).unwrap();
        let f = GridFunction::new(g, vec![1.0, 1.0, 0.0, 0.0]).unwrap();
        let m = maximal(&f, &ParamSubset::new(vec![0]).unwrap()).unwrap();
        assert_eq!(m.data(), &[1.0, 1.0, 0.5, 0.5]);
    }

    #[test]
    fn maximal_of_constant() {
        let g = MultiGrid::new(vec![2, 2]).unwrap();
        let m = maximal(&GridFunction::constant(&g, -3.0), &ParamSubset::all(&g)).unwrap();
        assert!(m.data().iter().all(|&v| v == 3.0));
    }
}
