use std::collections::BTreeMap;

use comb_core::comb::{CombSpec, LocatedPoint};
use comb_core::coverings::{
    build_cover, build_net, comb_probes, d_multiplicity, decompose_net, decomposition_search, verify_decomposition,
    BlockId, BrickLayout, Region, Verdict,
};
use comb_core::hyperbolic::{polar_dist, PolarPoint};
use comb_core::path_metric::PathMetric;
use comb_core::sampling::rng_for;
use rand::Rng;

/// Whether a labeling (bit i set = family 2) is a valid decomposition,
/// checked by union-find over all same-family pairs closer than `d`.
fn valid(dist: &[Vec<f64>], d: f64, bound: f64, mask: u32) -> bool {
    let n = dist.len();
    let fam = |i: usize| (mask >> i) & 1;
    let mut comp: Vec<usize> = (0..n).collect();
    // Repeated relabeling to the minimum index reachable.
    loop {
        let mut changed = false;
        for i in 0..n {
            for j in 0..n {
                if i != j && fam(i) == fam(j) && dist[i][j] < d && comp[j] < comp[i] {
                    comp[i] = comp[j];
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    (0..n).all(|i| (0..n).all(|j| comp[i] != comp[j] || dist[i][j] <= bound))
}

/// Exhaustive enumeration with point 0 in the first family.
fn exhaustive(dist: &[Vec<f64>], d: f64, bound: f64) -> bool {
    let n = dist.len();
    (0..1u32 << (n - 1)).any(|m| valid(dist, d, bound, m << 1))
}

fn random_instance(seed: u64) -> (Vec<Vec<f64>>, f64, f64) {
    let mut rng = rng_for(seed, 0);
    let n = rng.gen_range(2..=18);
    let pts: Vec<PolarPoint> =
        (0..n).map(|_| PolarPoint::new(rng.gen::<f64>() * 2.5, rng.gen::<f64>() * std::f64::consts::TAU).unwrap()).collect();
    let dist: Vec<Vec<f64>> = pts.iter().map(|p| pts.iter().map(|q| polar_dist(p, q)).collect()).collect();
    let d = 0.5 + rng.gen::<f64>() * 2.0;
    let bound = d * (0.3 + rng.gen::<f64>() * 1.5);
    (dist, d, bound)
}

#[test]
fn search_agrees_with_exhaustive_enumeration() {
    let (mut sat, mut unsat) = (0, 0);
    for seed in 0..50 {
        let (dist, d, bound) = random_instance(seed);
        let v = decomposition_search(&dist, d, bound, 50_000_000).unwrap();
        let expected = exhaustive(&dist, d, bound);
        match v.verdict {
            Verdict::Sat { families, .. } => {
                assert!(expected, "instance {seed}: search found a witness the oracle rejects");
                let mask = families.iter().enumerate().fold(0u32, |m, (i, &f)| m | (((f - 1) as u32) << i));
                assert!(valid(&dist, d, bound, mask));
                assert!(verify_decomposition(&dist, d, bound, &families).is_ok());
                sat += 1;
            }
            Verdict::Unsat => {
                assert!(!expected, "instance {seed}: oracle found a decomposition");
                unsat += 1;
            }
            Verdict::Unknown => panic!("instance {seed}: budget exhausted"),
        }
    }
    assert!(sat > 0 && unsat > 0, "instances should exercise both outcomes ({sat} sat, {unsat} unsat)");
}

#[test]
fn path_of_five_alternates() {
    let dist: Vec<Vec<f64>> = (0..5).map(|i: i32| (0..5).map(|j: i32| (i - j).abs() as f64).collect()).collect();
    assert!(exhaustive(&dist, 2.0, 1.0));
    match decomposition_search(&dist, 2.0, 1.0, 1000).unwrap().verdict {
        Verdict::Sat { families, .. } => assert!(verify_decomposition(&dist, 2.0, 1.0, &families).is_ok()),
        other => panic!("{other:?}"),
    }
}

#[test]
fn verdicts_are_monotone_in_the_net() {
    let spec = CombSpec::build(4, 1.0).unwrap();
    let metric = PathMetric::new(&spec, 0.25).unwrap();
    let net = build_net(&metric, &Region::SectorBall { sector: 4, radius: 3.0 }, 1.0).unwrap();
    let mut seen_unsat = false;
    for k in 1..=net.points.len() {
        let sub: Vec<Vec<f64>> = net.distances[..k].iter().map(|r| r[..k].to_vec()).collect();
        let v = decomposition_search(&sub, 2.0, 2.0, 10_000_000).unwrap();
        match v.verdict {
            Verdict::Sat { .. } => assert!(!seen_unsat, "prefix {k} is decomposable after a refuted prefix"),
            Verdict::Unsat => seen_unsat = true,
            Verdict::Unknown => {}
        }
    }
    let full = decompose_net(&net, 2.0, 2.0, 10_000_000).unwrap();
    assert_eq!(full.point_count, net.points.len());
}

#[test]
fn nets_in_a_convex_piece_use_plane_distances() {
    let spec = CombSpec::build(2, 2.0).unwrap();
    let metric = PathMetric::new(&spec, 0.25).unwrap();
    let net = build_net(&metric, &Region::SectorBall { sector: 1, radius: 1.0 }, 0.5).unwrap();
    assert!(net.points.len() > 1);
    for (i, p) in net.points.iter().enumerate() {
        for (j, q) in net.points.iter().enumerate() {
            let plane = spec.plane_dist(p, q).unwrap();
            assert!((net.distances[i][j] - plane).abs() < 1e-9);
        }
    }
    assert!(net.min_separation.unwrap() >= 0.5 - 1e-6);
    assert!(net.covering_radius <= 0.5);
}

#[test]
fn basepoint_ball_net_covers() {
    let spec = CombSpec::build(3, 2.0).unwrap();
    let metric = PathMetric::new(&spec, 0.1).unwrap();
    let net = build_net(&metric, &Region::BasepointBall { radius: 6.0 }, 1.0).unwrap();
    assert!(net.covering_radius <= 1.0);
    assert!(net.min_separation.unwrap() >= 1.0 - 1e-6);
    // Independent covering check over the probe grid.
    let probes = comb_probes(&spec, 6.0, 0.5);
    for p in &probes {
        let near = net.points.iter().map(|q| metric.dist(p, q).unwrap()).fold(f64::INFINITY, f64::min);
        assert!(near <= 1.0 + 1e-9);
    }
}

#[test]
fn block_diameters_match_raw_distances() {
    let spec = CombSpec::build(2, 3.0).unwrap();
    let metric = PathMetric::new(&spec, 0.2).unwrap();
    let d = 1.0;
    let cover = build_cover(&metric, d).unwrap();
    assert!(cover.certified);
    assert!(cover.multiplicity.multiplicity <= 3);
    let layout = BrickLayout::new(&spec, d).unwrap();
    let mut groups: BTreeMap<BlockId, Vec<LocatedPoint>> = BTreeMap::new();
    for p in comb_probes(&spec, f64::INFINITY, 0.5 * d) {
        groups.entry(layout.block_of(&spec, &p).unwrap()).or_default().push(p);
    }
    assert_eq!(groups.len(), cover.block_count);
    for b in &cover.blocks {
        let pts = &groups[&b.id];
        let mut diam: f64 = 0.0;
        for p in pts {
            for q in pts {
                diam = diam.max(metric.dist(p, q).unwrap());
            }
        }
        assert!((diam - b.diameter).abs() < 1e-9, "{:?}: {diam} vs {}", b.id, b.diameter);
        assert!(b.diameter <= cover.mesh);
    }
}

#[test]
fn hair_intervals_alone_meet_at_most_two() {
    let spec = CombSpec::build(2, 12.0).unwrap();
    let metric = PathMetric::new(&spec, 0.2).unwrap();
    for d in [0.4, 1.0] {
        let layout = BrickLayout::new(&spec, d).unwrap();
        let labeled: Vec<_> = comb_probes(&spec, f64::INFINITY, 0.5 * d)
            .into_iter()
            .map(|p| (p, layout.block_of(&spec, &p).unwrap()))
            .filter(|(_, b)| matches!(b, BlockId::Hair { .. }))
            .collect();
        assert!(d_multiplicity(&metric, &labeled, d).unwrap().multiplicity <= 2);
    }
}

#[test]
fn far_apart_blocks_are_met_one_at_a_time() {
    let spec = CombSpec::build(1, 10.0).unwrap();
    let metric = PathMetric::new(&spec, 0.5).unwrap();
    let d = 1.0;
    let a = BlockId::Cell { band: 0, cell: 0 };
    let b = BlockId::Hair { spoke: 3, interval: 1 };
    let mut labeled: Vec<_> = comb_probes(&spec, 1.0, 0.5).into_iter().map(|p| (p, a)).collect();
    let ray = spec.spoke(3).unwrap();
    labeled.extend((0..10).map(|k| (LocatedPoint::OnSpoke { spoke: 3, t: ray.attach_radius + 5.0 + 0.5 * k as f64 }, b)));
    assert_eq!(d_multiplicity(&metric, &labeled, d).unwrap().multiplicity, 1);
}
