//! Path-metric checks. Cross-sector distances are compared with a direct
//! minimization over the points where a path crosses the gluing rays, which
//! is exact because each truncated sector is convex.

use comb_core::comb::{CombSpec, LocatedPoint};
use comb_core::hyperbolic::PolarPoint;
use comb_core::path_metric::{same_piece_dist, witness_length, PathMetric, PortalGraph};
use comb_core::sampling::{rng_for, CombSampler};
use proptest::prelude::*;

fn disk(rho: f64, phi: f64) -> (f64, f64) {
    let r = (0.5 * rho).tanh();
    (r * phi.cos(), r * phi.sin())
}

/// Plane distance between polar points, through disk coordinates.
fn plane(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (pa, pb) = (disk(a.0, a.1), disk(b.0, b.1));
    let d2 = (pa.0 - pb.0).powi(2) + (pa.1 - pb.1).powi(2);
    let na = 1.0 - pa.0 * pa.0 - pa.1 * pa.1;
    let nb = 1.0 - pb.0 * pb.0 - pb.1 * pb.1;
    let x = 2.0 * d2 / (na * nb);
    (x + (x * (x + 2.0)).sqrt()).ln_1p()
}

fn ternary(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..100 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1) < f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    f(0.5 * (lo + hi))
}

/// Distance between a point of sector `from` and a point of sector `to`
/// (`from < to`), minimizing over the crossing radii on each gluing ray in
/// between. Supports one or two crossings.
fn crossing_oracle(spec: &CombSpec, from: usize, p: (f64, f64), to: usize, q: (f64, f64)) -> f64 {
    let ray = |j: usize| spec.sectors[j - 1].theta_lo;
    let len = |j: usize| spec.sectors[j - 2].truncation_radius.min(spec.sectors[j - 1].truncation_radius);
    match to - from {
        1 => {
            let j = to;
            ternary(0.0, len(j), |t| plane(p, (t, ray(j))) + plane((t, ray(j)), q))
        }
        2 => {
            let (j, k) = (from + 1, to);
            ternary(0.0, len(k), |s| {
                ternary(0.0, len(j), |t| plane(p, (t, ray(j))) + plane((t, ray(j)), (s, ray(k))))
                    + plane((s, ray(k)), q)
            })
        }
        _ => unreachable!(),
    }
}

fn in_sector(spec: &CombSpec, n: usize, u: f64, v: f64) -> (LocatedPoint, (f64, f64)) {
    let s = &spec.sectors[n - 1];
    let rho = u * s.truncation_radius;
    let phi = s.theta_lo + v * s.alpha;
    (LocatedPoint::InSector { sector: n, position: PolarPoint::new(rho, phi).unwrap() }, (rho, phi))
}

#[test]
fn cross_sector_distances_match_crossing_oracle() {
    let spec = CombSpec::build(3, 2.0).unwrap();
    let eps = 0.05;
    let metric = PathMetric::new(&spec, eps).unwrap();
    let mut rng = rng_for(21, 0);
    use rand::Rng;
    for (from, to) in [(1, 2), (2, 3), (1, 3)] {
        for _ in 0..40 {
            let (p, pp) = in_sector(&spec, from, rng.gen(), rng.gen());
            let (q, qp) = in_sector(&spec, to, rng.gen(), rng.gen());
            let exact = crossing_oracle(&spec, from, pp, to, qp);
            let d = metric.dist(&p, &q).unwrap();
            let crossings = (to - from) as f64;
            assert!(d >= exact - 1e-9, "{from}->{to}: {d} < {exact}");
            assert!(d <= exact + crossings * eps, "{from}->{to}: {d} vs {exact}");
        }
    }
}

#[test]
fn coarse_metric_tracks_fine_graph() {
    let spec = CombSpec::build(3, 4.0).unwrap();
    let coarse = PathMetric::new(&spec, 0.1).unwrap();
    let fine = PortalGraph::build(&spec, 0.01).unwrap();
    let sampler = CombSampler::new(&spec, spec.r_max);
    let mut rng = rng_for(22, 0);
    for _ in 0..40 {
        let p = sampler.sample(&mut rng);
        let q = sampler.sample(&mut rng);
        let c = coarse.dist(&p, &q).unwrap();
        let (f, w) = fine.dist_x(&spec, &p, &q).unwrap();
        assert!(c >= f - 1e-9 && c - f <= 2.0 * 0.1, "{c} vs {f}");
        assert!((witness_length(&spec, &w.polyline).unwrap() - f).abs() < 1e-9);
    }
}

#[test]
fn hair_points_exit_through_attachments() {
    let spec = CombSpec::build(3, 6.0).unwrap();
    let metric = PathMetric::new(&spec, 0.1).unwrap();
    let a = spec.spoke(3).unwrap();
    let b = spec.spoke(spec.sectors[2].first_spoke + 40).unwrap();
    let va = LocatedPoint::OnSpoke { spoke: a.id, t: a.attach_radius };
    let vb = LocatedPoint::OnSpoke { spoke: b.id, t: b.attach_radius };
    let base = metric.dist(&va, &vb).unwrap();
    for (ha, hb) in [(0.5, 1.0), (2.0, 3.5), (4.0, 0.25)] {
        let p = LocatedPoint::OnSpoke { spoke: a.id, t: a.attach_radius + ha };
        let q = LocatedPoint::OnSpoke { spoke: b.id, t: b.attach_radius + hb };
        assert!((metric.dist(&p, &q).unwrap() - (ha + base + hb)).abs() < 1e-9);
    }
}

#[test]
fn halving_epsilon_never_increases_distances() {
    let spec = CombSpec::build(4, 3.0).unwrap();
    let m1 = PathMetric::new(&spec, 0.2).unwrap();
    let m2 = PathMetric::new(&spec, 0.1).unwrap();
    let sampler = CombSampler::new(&spec, spec.r_max);
    let mut rng = rng_for(23, 0);
    for _ in 0..500 {
        let p = sampler.sample(&mut rng);
        let q = sampler.sample(&mut rng);
        let (a, b) = (m1.dist(&p, &q).unwrap(), m2.dist(&p, &q).unwrap());
        assert!(b <= a + 1e-9 && a - b <= 3.0 * 0.2);
    }
}

fn located(spec: &CombSpec) -> impl Strategy<Value = LocatedPoint> + '_ {
    let sectors = spec.n_sectors;
    let spokes = spec.spoke_count;
    prop_oneof![
        (1..=sectors, 0.0..=1.0f64, 0.0..=1.0f64).prop_map(move |(n, u, v)| in_sector(spec, n, u, v).0),
        (0..spokes, 0.0..=1.0f64).prop_map(move |(id, u)| {
            let ray = spec.spoke(id).unwrap();
            LocatedPoint::OnSpoke { spoke: id, t: ray.attach_radius + u * (spec.r_max - ray.attach_radius) }
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn metric_axioms(seed in 0u64..1000) {
        let spec = CombSpec::build(3, 3.0).unwrap();
        let metric = PathMetric::new(&spec, 0.2).unwrap();
        let sampler = CombSampler::new(&spec, spec.r_max);
        let mut rng = rng_for(seed, 0);
        let (p, q, r) = (sampler.sample(&mut rng), sampler.sample(&mut rng), sampler.sample(&mut rng));
        let pq = metric.dist(&p, &q).unwrap();
        prop_assert_eq!(metric.dist(&p, &p).unwrap(), 0.0);
        prop_assert_eq!(pq, metric.dist(&q, &p).unwrap());
        prop_assert!(pq >= spec.plane_dist(&p, &q).unwrap() - 1e-9);
        let pr = metric.dist(&p, &r).unwrap();
        let qr = metric.dist(&q, &r).unwrap();
        prop_assert!(pr <= pq + qr + 1e-9);
    }
}

#[test]
fn same_piece_pairs_are_exact() {
    let spec = CombSpec::build(3, 3.0).unwrap();
    let metric = PathMetric::new(&spec, 0.25).unwrap();
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let strategy = (located(&spec), 0.0..=1.0f64, 0.0..=1.0f64);
    runner
        .run(&strategy, |(p, u, v)| {
            // A second point on the same piece.
            let q = match p {
                LocatedPoint::InSector { sector, .. } => in_sector(&spec, sector, u, v).0,
                LocatedPoint::OnSpoke { spoke, .. } => {
                    let ray = spec.spoke(spoke).unwrap();
                    LocatedPoint::OnSpoke { spoke, t: ray.attach_radius + u * (spec.r_max - ray.attach_radius) }
                }
            };
            let exact = same_piece_dist(&spec, &p, &q).unwrap().unwrap();
            prop_assert!((metric.dist(&p, &q).unwrap() - exact).abs() <= 1e-9);
            Ok(())
        })
        .unwrap();
}
