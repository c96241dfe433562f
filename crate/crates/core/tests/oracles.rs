mod common;

use common::*;
use renorm_lab::map_model::AnalyticMap;
use renorm_lab::renormalization::build_tower;

#[test]
fn superstable_parameters_of_periods_two_and_four() {
    let cs = superstable_parameters(3);
    assert_eq!(cs[1], -1.0);
    let c = cs[2];
    assert!(quad_iter(c, 0.0, 4).abs() < 1e-12);
    assert!(quad_iter(c, 0.0, 2).abs() > 0.1);
    assert!((c + 1.3107026413368328).abs() < 1e-12);
}

#[test]
fn cascade_accumulates_at_the_known_parameter() {
    let c = feigenbaum_parameter();
    assert!((c + 1.401155189092050).abs() < 1e-10, "{c}");
}

#[test]
fn tower_lengths_match_direct_iteration() {
    let c = feigenbaum_parameter();
    let map = AnalyticMap::quadratic(c).unwrap();
    let tower = build_tower(&map, 0, 6, 64, 8).unwrap();
    let direct = central_lengths(c, 6);
    for (l, d) in tower.iter().zip(&direct) {
        assert!((l.interval.len() - d).abs() <= 1e-9 * d, "level {}: {} vs {d}", l.k, l.interval.len());
    }
}

#[test]
fn first_entry_matches_grid_scan() {
    let c = feigenbaum_parameter();
    let map = AnalyticMap::quadratic(c).unwrap();
    let tower = build_tower(&map, 0, 3, 64, 8).unwrap();
    for level in &tower[1..] {
        let a = compare_first_entry(&map, c, level, 500, 200, 17 + level.k as u64);
        assert!(a.ok(), "level {}: {:?}", level.k, &a.mismatches[..a.mismatches.len().min(5)]);
        assert!(a.checked > 300);
    }
}

#[test]
fn first_entry_matches_grid_scan_for_superattracting_map() {
    let map = AnalyticMap::quadratic(-1.0).unwrap();
    let tower = build_tower(&map, 0, 1, 8, 8).unwrap();
    let a = compare_first_entry(&map, -1.0, &tower[0], 500, 200, 5);
    assert!(a.ok(), "{:?}", &a.mismatches[..a.mismatches.len().min(5)]);
}

#[test]
fn real_backward_orbits_match_bisection() {
    let c = feigenbaum_parameter();
    let map = AnalyticMap::quadratic(c).unwrap();
    let tower = build_tower(&map, 0, 5, 64, 8).unwrap();
    let a = compare_real_orbits(&map, c, &tower[1..], 1000, 99);
    assert!(a.ok(), "{:?}", &a.mismatches[..a.mismatches.len().min(5)]);
}
