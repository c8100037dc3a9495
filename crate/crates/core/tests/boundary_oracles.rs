use comb_core::boundary::{
    boundary_points, cover_from_matrix, product_at_infinity, ray_gromov_product, visual_distance, visual_matrix,
    zero_dim_cover, BoundaryPoint, VisualMetricParams,
};
use comb_core::comb::CombSpec;
use comb_core::path_metric::PathMetric;
use proptest::prelude::*;

/// Finite Gromov products of far ray points settle on the exit formula.
#[test]
fn products_stabilize_along_rays() {
    let spec = CombSpec::build(3, 20.0).unwrap();
    let eps = 0.1;
    let metric = PathMetric::new(&spec, eps).unwrap();
    let s1 = &spec.sectors[0];
    let s3 = &spec.sectors[2];
    let pairs = [
        (s1.first_spoke + 2, s1.first_spoke + 3),
        (spec.sectors[1].first_spoke + 10, spec.sectors[1].first_spoke + 11),
        (s1.first_spoke + 4, s3.first_spoke + 200),
        (0, spec.spoke_count - 1),
    ];
    for (a, b) in pairs {
        let (ra, rb) = (spec.spoke(a).unwrap(), spec.spoke(b).unwrap());
        let (pa, pb) = (BoundaryPoint { spoke: a }, BoundaryPoint { spoke: b });
        let limit = product_at_infinity(&metric, pa, pb).unwrap();
        for (ha, hb) in [(5.0, 5.0), (7.0, 11.0), (12.0, 6.5)] {
            let finite = ray_gromov_product(&metric, pa, ra.attach_radius + ha, pb, rb.attach_radius + hb).unwrap();
            assert!((finite - limit).abs() <= 2.0 * eps, "{a},{b}: {finite} vs {limit}");
        }
    }
}

#[test]
fn same_sector_products_grow_with_depth() {
    let spec = CombSpec::build(4, 5.0).unwrap();
    let metric = PathMetric::new(&spec, 0.1).unwrap();
    for s in &spec.sectors {
        for k in 0..s.pieces.min(20) {
            let a = BoundaryPoint { spoke: s.first_spoke + k };
            let b = BoundaryPoint { spoke: s.first_spoke + k + 1 };
            let p = product_at_infinity(&metric, a, b).unwrap();
            assert!(p >= s.truncation_radius - 0.5, "sector {} vertex {k}: {p}", s.index);
        }
    }
    let n1 = spec.sectors[0].truncation_radius;
    let n3 = spec.sectors[2].truncation_radius;
    for k in [1, 4, 7] {
        for j in [1, 100, 300] {
            let a = BoundaryPoint { spoke: k };
            let b = BoundaryPoint { spoke: spec.sectors[2].first_spoke + j };
            assert!(product_at_infinity(&metric, a, b).unwrap() <= 0.5 * (n1 + n3));
        }
    }
}

#[test]
fn matrix_agrees_with_products() {
    let spec = CombSpec::build(3, 2.0).unwrap();
    let metric = PathMetric::new(&spec, 0.2).unwrap();
    let params = VisualMetricParams::new(2.0, 1.0, 1.0).unwrap();
    let pts: Vec<_> = boundary_points(&spec).into_iter().step_by(17).collect();
    let m = visual_matrix(&metric, &pts, &params).unwrap();
    for (i, &a) in pts.iter().enumerate() {
        for (j, &b) in pts.iter().enumerate() {
            let v = visual_distance(&params, product_at_infinity(&metric, a, b).unwrap());
            assert!((m[i][j] - v).abs() <= 1e-12 * (1.0 + v));
        }
    }
}

#[test]
fn covers_shrink_with_the_mesh_bound() {
    let spec = CombSpec::build(4, 5.0).unwrap();
    let metric = PathMetric::new(&spec, 0.1).unwrap();
    let pts: Vec<_> = boundary_points(&spec).into_iter().take(120).collect();
    let params = VisualMetricParams::default();
    let mut last = 0;
    for k in 1..=6 {
        let c = zero_dim_cover(&metric, &pts, 0.5f64.powi(k), &params).unwrap();
        assert!(c.clusters.len() >= last);
        last = c.clusters.len();
    }
}

fn symmetric_matrix() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2usize..25).prop_flat_map(|n| {
        proptest::collection::vec(0.001..1.0f64, n * (n - 1) / 2).prop_map(move |upper| {
            let mut m = vec![vec![0.0; n]; n];
            let mut k = 0;
            for i in 0..n {
                for j in i + 1..n {
                    m[i][j] = upper[k];
                    m[j][i] = upper[k];
                    k += 1;
                }
            }
            m
        })
    })
}

proptest! {
    #[test]
    fn cover_invariants(m in symmetric_matrix(), eps in 0.01..1.5f64) {
        let ids: Vec<usize> = (100..100 + m.len()).collect();
        let c = cover_from_matrix(&ids, &m, eps, 1.0).unwrap();
        let mut all: Vec<usize> = c.clusters.iter().flatten().copied().collect();
        all.sort_unstable();
        prop_assert_eq!(&all, &ids);
        prop_assert!(c.mesh < eps);
        let label = |id: usize| c.clusters.iter().position(|cl| cl.contains(&id)).unwrap();
        let mut mesh: f64 = 0.0;
        let mut gap = f64::INFINITY;
        for i in 0..m.len() {
            for j in i + 1..m.len() {
                if label(ids[i]) == label(ids[j]) {
                    mesh = mesh.max(m[i][j]);
                } else {
                    gap = gap.min(m[i][j]);
                }
            }
        }
        prop_assert_eq!(mesh, c.mesh);
        prop_assert_eq!(c.min_gap, gap.is_finite().then_some(gap));
        prop_assert!(c.min_gap.map_or(true, |g| g > 0.0));
    }
}
