use proptest::prelude::*;

use dyadic_core::bmo::{bmo_v_norm, little_bmo_norm, little_product_bmo_norm, product_bmo_norm};
use dyadic_core::commutator::{commutator_apply, commutator_expand};
use dyadic_core::experiments::{random_function, ExperimentConfig};
use dyadic_core::grid::{inner_product, lp_norm, lp_norm_unweighted};
use dyadic_core::haar::{haar_transform, inverse_transform};
use dyadic_core::ops::{gen_full, gen_partial, gen_shift, maximal, square_function, FullFlavor, OperatorSpec};
use dyadic_core::weights::{ap_constant, bloom_weight, conjugate, gen_ap_weight, slice_ap_constant};
use dyadic_core::{CommutatorSpec, GridFunction, MultiGrid, ParamSubset, Partition, TestFamily, Weight};

fn levels() -> impl Strategy<Value = Vec<usize>> {
    prop_oneof![
        (1usize..=5).prop_map(|n| vec![n]),
        (1usize..=3, 1usize..=3).prop_map(|(a, b)| vec![a, b]),
        (1usize..=2, 1usize..=2, 1usize..=2).prop_map(|(a, b, c)| vec![a, b, c]),
    ]
}

fn grid_and_seed() -> impl Strategy<Value = (MultiGrid, u64)> {
    (levels(), any::<u64>()).prop_map(|(l, s)| (MultiGrid::new(l).unwrap(), s))
}

fn exponent() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.5), Just(2.0), Just(3.0), 1.1f64..5.0]
}

fn rel(x: f64, y: f64) -> f64 {
    (x - y).abs() / y.abs().max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transform_round_trips_and_preserves_energy((grid, seed) in grid_and_seed()) {
        let f = random_function(&grid, seed);
        let c = haar_transform(&f, &ParamSubset::all(&grid)).unwrap();
        prop_assert!(inverse_transform(&c).relative_diff(&f).unwrap() < 1e-13);
        let energy: f64 = c.data().iter().map(|x| x * x).sum();
        prop_assert!(rel(energy, inner_product(&f, &f).unwrap()) < 1e-13);
    }

    #[test]
    fn lp_norm_is_homogeneous_and_monotone((grid, seed) in grid_and_seed(), p in exponent(), c in -4.0f64..4.0) {
        let f = random_function(&grid, seed);
        let w = gen_ap_weight(seed ^ 1, &grid, 0.4).unwrap();
        let n = lp_norm(&f, p, w.values()).unwrap();
        prop_assert!(rel(lp_norm(&f.scaled(c), p, w.values()).unwrap(), c.abs() * n) < 1e-12 || c == 0.0);
        let bigger = f.map(|x| x.abs() + 0.1);
        prop_assert!(lp_norm(&bigger, p, w.values()).unwrap() >= n);
    }

    #[test]
    fn generated_weights_satisfy_ap_bounds((grid, seed) in grid_and_seed(), roughness in 0.0f64..0.9, p in exponent()) {
        let w = gen_ap_weight(seed, &grid, roughness).unwrap();
        let again = gen_ap_weight(seed, &grid, roughness).unwrap();
        prop_assert_eq!(w.values().data(), again.values().data());
        let full = ap_constant(&w, p).unwrap();
        prop_assert!(full >= 1.0 - 1e-12);
        let q = conjugate(p);
        let dual = ap_constant(&w.power(1.0 - q), q).unwrap();
        prop_assert!(rel(dual, full.powf(q - 1.0)) < 1e-10);
        for axis in 0..grid.m() {
            prop_assert!(slice_ap_constant(&w, p, axis).unwrap() <= full * (1.0 + 1e-12));
        }
    }

    #[test]
    fn zero_roughness_gives_the_unit_weight((grid, seed) in grid_and_seed()) {
        let w = gen_ap_weight(seed, &grid, 0.0).unwrap();
        prop_assert!(w.values().data().iter().all(|&x| x == 1.0));
    }

    #[test]
    fn bloom_weight_of_equal_weights_is_one((grid, seed) in grid_and_seed(), p in exponent()) {
        let w = gen_ap_weight(seed, &grid, 0.5).unwrap();
        let nu = bloom_weight(&w, &w, p).unwrap();
        prop_assert!(nu.values().data().iter().all(|&x| (x - 1.0).abs() < 1e-15));
    }

    #[test]
    fn bmo_functionals_vanish_on_constants_and_are_homogeneous((grid, seed) in grid_and_seed(), c in -3.0f64..3.0, k in -3.0f64..3.0) {
        let nu = gen_ap_weight(seed, &grid, 0.3).unwrap();
        let all = ParamSubset::all(&grid);
        let constant = GridFunction::constant(&grid, c);
        prop_assert_eq!(product_bmo_norm(&constant, &nu, &all, TestFamily::Rectangles).unwrap(), 0.0);
        prop_assert_eq!(little_bmo_norm(&constant, &nu).unwrap(), 0.0);
        let singletons = Partition::new((0..grid.m()).map(|a| vec![a]).collect(), grid.m()).unwrap();
        prop_assert_eq!(little_product_bmo_norm(&constant, &nu, &singletons).unwrap(), 0.0);

        let b = random_function(&grid, seed ^ 7);
        let scaled = b.scaled(k);
        let base = product_bmo_norm(&b, &nu, &all, TestFamily::Rectangles).unwrap();
        prop_assert!((product_bmo_norm(&scaled, &nu, &all, TestFamily::Rectangles).unwrap() - k.abs() * base).abs() <= 1e-12 * base.max(1.0));
        let little = little_bmo_norm(&b, &nu).unwrap();
        prop_assert!((little_bmo_norm(&scaled, &nu).unwrap() - k.abs() * little).abs() <= 1e-12 * little.max(1.0));
    }

    #[test]
    fn unions_never_decrease_product_bmo(seed in any::<u64>(), shape in prop_oneof![Just(vec![2usize, 2]), Just(vec![1usize, 2]), Just(vec![3usize])]) {
        let grid = MultiGrid::new(shape).unwrap();
        let b = random_function(&grid, seed);
        let nu = gen_ap_weight(seed ^ 3, &grid, 0.5).unwrap();
        let all = ParamSubset::all(&grid);
        let rect = product_bmo_norm(&b, &nu, &all, TestFamily::Rectangles).unwrap();
        let two = product_bmo_norm(&b, &nu, &all, TestFamily::RectanglesPlusUnions(2)).unwrap();
        let three = product_bmo_norm(&b, &nu, &all, TestFamily::RectanglesPlusUnions(3)).unwrap();
        prop_assert!(rect <= two && two <= three);
    }

    #[test]
    fn slice_constant_symbols_have_zero_bmo_v(seed in any::<u64>()) {
        let grid = MultiGrid::new(vec![2, 3]).unwrap();
        let b = random_function(&MultiGrid::new(vec![2]).unwrap(), seed);
        let lifted = GridFunction::from_fn(&grid, |idx| b.data()[idx[0]]).unwrap();
        let nu = Weight::unit(&grid);
        prop_assert_eq!(bmo_v_norm(&lifted, &nu, &ParamSubset::new(vec![1]).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn maximal_dominates_and_is_dominated_by_iteration((grid, seed) in grid_and_seed()) {
        let f = random_function(&grid, seed);
        let all = ParamSubset::all(&grid);
        let strong = maximal(&f, &all).unwrap();
        let mut iterated = f.clone();
        for a in 0..grid.m() {
            iterated = maximal(&iterated, &ParamSubset::new(vec![a]).unwrap()).unwrap();
        }
        for ((s, it), x) in strong.data().iter().zip(iterated.data()).zip(f.data()) {
            prop_assert!(*s >= x.abs() - 1e-15);
            prop_assert!(*s <= it + 1e-14);
        }
    }

    #[test]
    fn square_function_is_an_isometry_on_mean_zero_inputs((grid, seed) in grid_and_seed()) {
        let f = random_function(&grid, seed);
        let all = ParamSubset::all(&grid);
        let mut c = haar_transform(&f, &all).unwrap();
        for (flat, x) in c.data_mut().iter_mut().enumerate() {
            let idx = grid.unflatten(flat);
            if idx.contains(&0) {
                *x = 0.0;
            }
        }
        let g = inverse_transform(&c);
        let (_, s) = square_function(&g, &all, &Weight::unit(&grid), 2.0).unwrap();
        prop_assert!(rel(s, lp_norm_unweighted(&g, 2.0).unwrap()) < 1e-12 || s < 1e-14);
    }

    #[test]
    fn commutators_expand_exactly_and_vanish_for_constant_symbols(seed in any::<u64>(), c in -5.0f64..5.0, pick in 0usize..4) {
        let grid = MultiGrid::new(vec![3, 3]).unwrap();
        let shift = |axes: Vec<usize>, cx: Vec<(usize, usize)>, s: u64| {
            OperatorSpec::Shift(gen_shift(s, &grid, &ParamSubset::new(axes).unwrap(), &cx, 1.0).unwrap())
        };
        let ops = match pick {
            0 => vec![shift(vec![0, 1], vec![(1, 0), (0, 1)], seed)],
            1 => vec![shift(vec![0], vec![(1, 1)], seed), shift(vec![1], vec![(0, 1)], seed ^ 1)],
            2 => vec![OperatorSpec::PartialParaproduct(gen_partial(seed, &grid, 0, 1, (1, 0), 1.0).unwrap())],
            _ => vec![OperatorSpec::FullParaproduct(gen_full(seed, &grid, [0, 1], FullFlavor::ALL[(seed % 4) as usize], 1.0).unwrap())],
        };
        let f = random_function(&grid, seed ^ 9);
        let flat = CommutatorSpec::new(ops.clone(), GridFunction::constant(&grid, c)).unwrap();
        prop_assert!(commutator_apply(&flat, &f).unwrap().max_abs() <= 1e-14);

        let spec = CommutatorSpec::new(ops, random_function(&grid, seed ^ 5)).unwrap();
        let direct = commutator_apply(&spec, &f).unwrap();
        let mut sum = GridFunction::zeros(&grid);
        for t in commutator_expand(&spec, &f).unwrap() {
            sum = sum.add(&t.value).unwrap();
        }
        prop_assert!(sum.relative_diff(&direct).unwrap() < 1e-11);
    }

    #[test]
    fn experiment_configs_round_trip(seed in any::<u64>(), ensemble in 1usize..500, p in 1.01f64..8.0, roughness in 0.0f64..0.99) {
        let text = format!(
            r#"{{"version": 1, "name": "x", "levels": [3, 2], "p": {p}, "ensemble": {ensemble}, "seed": {seed},
                "experiment": {{"kind": "bloom", "commutators": [[{{"type": "shift", "axes": [0, 1], "complexity": [[1, 0], [0, 1]]}}]]}},
                "mu": {{"generated": {{"roughness": {roughness}}}}}}}"#
        );
        let cfg = ExperimentConfig::from_json(&text).unwrap();
        prop_assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }
}
