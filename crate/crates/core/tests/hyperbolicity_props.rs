use comb_core::comb::CombSpec;
use comb_core::hyperbolic::{polar_dist, PolarPoint};
use comb_core::hyperbolicity::{estimate_delta, estimate_plane_delta, four_point_defect};
use comb_core::path_metric::PathMetric;
use comb_core::sampling::{rng_for, CombSampler};
use proptest::prelude::*;

/// Every ordering of four indices.
fn permutations() -> Vec<[usize; 4]> {
    let mut out = Vec::new();
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let p = [a, b, c, d];
                    if (0..4).all(|i| p.contains(&i)) {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn defect_is_invariant_under_relabeling(seed in 0u64..10_000) {
        let spec = CombSpec::build(3, 3.0).unwrap();
        let metric = PathMetric::new(&spec, 0.25).unwrap();
        let sampler = CombSampler::new(&spec, spec.r_max);
        let mut rng = rng_for(seed, 1);
        let pts: Vec<_> = (0..4).map(|_| sampler.sample(&mut rng)).collect();
        let dist = |a: &_, b: &_| metric.dist(a, b);
        let base = four_point_defect(&pts[0], &pts[1], &pts[2], &pts[3], dist).unwrap();
        prop_assert!(base >= 0.0);
        for p in permutations() {
            let d = four_point_defect(&pts[p[0]], &pts[p[1]], &pts[p[2]], &pts[p[3]], dist).unwrap();
            prop_assert!((d - base).abs() <= 1e-9);
        }
    }

    #[test]
    fn plane_quadruples_stay_thin(r in proptest::collection::vec((0.0..15.0f64, 0.0..6.283f64), 4)) {
        let pts: Vec<_> = r.iter().map(|&(rho, phi)| PolarPoint::new(rho, phi).unwrap()).collect();
        let d = four_point_defect(&pts[0], &pts[1], &pts[2], &pts[3], |a, b| Ok(polar_dist(a, b))).unwrap();
        prop_assert!(d <= 1.0);
    }
}

#[test]
fn comb_estimate_plateaus() {
    let spec = CombSpec::build(4, 6.0).unwrap();
    let metric = PathMetric::new(&spec, 0.1).unwrap();
    let near = estimate_delta(&metric, 5_000, 8.0, 3).unwrap();
    let far = estimate_delta(&metric, 5_000, 14.0, 3).unwrap();
    assert!(near.delta_max.is_finite() && far.delta_max.is_finite());
    assert!(far.delta_max <= near.delta_max + 1.0);
    let plane = estimate_plane_delta(5_000, 14.0, 3).unwrap();
    assert!(plane.delta_max <= 1.0);
    assert_eq!(plane.epsilon, None);
}
