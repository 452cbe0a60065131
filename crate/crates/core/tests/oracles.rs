mod common;

use common::*;
use dyadic_core::rng::SplitMix64;

#[test]
fn every_functional_matches_its_brute_force_oracle() {
    for (name, err) in oracle_errors(ORACLE_INSTANCES, 0x5eed) {
        assert!(err <= ORACLE_TOLERANCE, "{name}: relative error {err:e}");
    }
}

#[test]
fn oracle_haar_coefficients_agree_with_the_transform() {
    let mut rng = SplitMix64::new(3);
    let levels = vec![2, 3];
    let b = random_values(&mut rng, total_cells(&levels), -1.0, 1.0);
    let f = function(&levels, b.clone());
    for r in rectangles(&levels).into_iter().filter(|r| r.iter().zip(&levels).all(|(s, &n)| s.level < n)) {
        let rect = dyadic_core::DyadicRectangle::new(
            r.iter()
                .enumerate()
                .map(|(a, s)| dyadic_core::DyadicInterval::new(a, s.level, s.lo >> (levels[a] - s.level)).unwrap())
                .collect(),
        )
        .unwrap();
        let h = dyadic_core::haar::haar_function(f.grid(), &rect).unwrap();
        let direct = dyadic_core::grid::inner_product(&f, &h).unwrap();
        assert!((direct - haar_coefficient(&levels, &b, &r)).abs() < 1e-14);
    }
}

#[test]
fn two_valued_weight_attains_its_maximum_on_a_straddling_rectangle() {
    let levels = vec![2];
    let w = vec![1.0, 1.0, 4.0, 4.0];
    let f = function(&levels, w.clone());
    let lib = dyadic_core::weights::ap_constant(&dyadic_core::Weight::new(f).unwrap(), 2.0).unwrap();
    assert!((lib - 2.5 * 0.625).abs() < 1e-15);
    assert!((ap_constant(&levels, &w, 2.0) - lib).abs() < 1e-15);
}

#[test]
fn left_indicator_has_little_bmo_one_half_and_the_expected_maximal_function() {
    let levels = vec![3];
    let b = vec![1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0];
    let f = function(&levels, b.clone());
    let unit = dyadic_core::Weight::unit(f.grid());
    assert_eq!(dyadic_core::bmo::little_bmo_norm(&f, &unit).unwrap(), 0.5);
    assert_eq!(little_bmo(&levels, &b, &[1.0; 8]), 0.5);
    let m = dyadic_core::ops::maximal(&f, &dyadic_core::ParamSubset::all(f.grid())).unwrap();
    assert_eq!(m.data(), &[1.0, 1.0, 1.0, 1.0, 0.5, 0.5, 0.5, 0.5]);
}
