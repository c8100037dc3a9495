//! Boundary at infinity of the comb: one point per spoke ray, Gromov products
//! at infinity, the visual metric and small-mesh disjoint covers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::comb::{CombSpec, LocatedPoint};
use crate::error::{Error, Result};
use crate::path_metric::PathMetric;

/// The end of one spoke ray.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub spoke: usize,
}

/// Every boundary point of a finite build, in spoke order.
pub fn boundary_points(spec: &CombSpec) -> Vec<BoundaryPoint> {
    (0..spec.spoke_count).map(|spoke| BoundaryPoint { spoke }).collect()
}

/// Visual metric `a^(-product)` with comparison constants `c1 ≤ c2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisualMetricParams {
    pub a: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Default for VisualMetricParams {
    fn default() -> Self {
        VisualMetricParams { a: std::f64::consts::E, c1: 1.0, c2: 1.0 }
    }
}

impl VisualMetricParams {
    pub fn new(a: f64, c1: f64, c2: f64) -> Result<Self> {
        if !(a > 1.0 && a.is_finite()) {
            return Err(Error::InvalidParameter(format!("visual base must exceed 1, got {a}")));
        }
        if !(c1 > 0.0 && c1 <= c2 && c2.is_finite()) {
            return Err(Error::InvalidParameter(format!("need 0 < c1 <= c2, got {c1}, {c2}")));
        }
        Ok(VisualMetricParams { a, c1, c2 })
    }
}

fn exit_point(spec: &CombSpec, p: BoundaryPoint) -> Result<(LocatedPoint, f64)> {
    let ray = spec.spoke(p.spoke)?;
    Ok((LocatedPoint::OnSpoke { spoke: p.spoke, t: ray.attach_radius }, ray.attach_radius))
}

/// Gromov product of two boundary points seen from the basepoint. Any path
/// between far points of two hairs leaves through the attachments, so the
/// product is `(N_a + N_b - d(v_a, v_b)) / 2`. Returns `f64::INFINITY` when
/// the two points coincide.
pub fn product_at_infinity(metric: &PathMetric<'_>, a: BoundaryPoint, b: BoundaryPoint) -> Result<f64> {
    let spec = metric.spec();
    let (va, na) = exit_point(spec, a)?;
    let (vb, nb) = exit_point(spec, b)?;
    if a == b {
        return Ok(f64::INFINITY);
    }
    Ok(0.5 * (na + nb - metric.dist(&va, &vb)?))
}

/// Gromov product at the basepoint of the points at radius `ta` on spoke `a`
/// and radius `tb` on spoke `b`.
pub fn ray_gromov_product(metric: &PathMetric<'_>, a: BoundaryPoint, ta: f64, b: BoundaryPoint, tb: f64) -> Result<f64> {
    let x = LocatedPoint::OnSpoke { spoke: a.spoke, t: ta };
    let y = LocatedPoint::OnSpoke { spoke: b.spoke, t: tb };
    let o = LocatedPoint::BASEPOINT;
    Ok(0.5 * (metric.dist(&x, &o)? + metric.dist(&y, &o)? - metric.dist(&x, &y)?))
}

/// `a^(-product)`; the infinite product of a point with itself gives 0.
pub fn visual_distance(params: &VisualMetricParams, product: f64) -> f64 {
    if product == f64::INFINITY {
        0.0
    } else {
        params.a.powf(-product)
    }
}

/// Symmetric matrix of visual distances between `points`.
pub fn visual_matrix(metric: &PathMetric<'_>, points: &[BoundaryPoint], params: &VisualMetricParams) -> Result<Vec<Vec<f64>>> {
    let spec = metric.spec();
    let exits: Vec<(LocatedPoint, f64)> = points.iter().map(|&p| exit_point(spec, p)).collect::<Result<_>>()?;
    let upper: Vec<Vec<f64>> = (0..points.len())
        .into_par_iter()
        .map(|i| {
            let field = metric.field(&exits[i].0)?;
            (i + 1..points.len())
                .map(|j| {
                    if points[i] == points[j] {
                        return Ok(0.0);
                    }
                    let product = 0.5 * (exits[i].1 + exits[j].1 - field.dist_to(&exits[j].0)?);
                    Ok(visual_distance(params, product))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let n = points.len();
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for (k, &d) in upper[i].iter().enumerate() {
            m[i][i + 1 + k] = d;
            m[i + 1 + k][i] = d;
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCover {
    pub eps_mesh: f64,
    /// Clusters of spoke ids, each sorted, ordered by their first element.
    pub clusters: Vec<Vec<usize>>,
    /// Largest visual distance inside one cluster.
    pub mesh: f64,
    /// Smallest visual distance between two clusters; absent for one cluster.
    pub min_gap: Option<f64>,
    /// `min_gap` shrunk by the worst-case effect of the portal discretization.
    pub gap_lower_bound: Option<f64>,
    /// Number of halvings of the linkage threshold that were needed.
    pub depth: u32,
}

fn components(members: &[usize], matrix: &[Vec<f64>], threshold: f64) -> Vec<Vec<usize>> {
    let mut seen = vec![false; members.len()];
    let mut out = Vec::new();
    for start in 0..members.len() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start];
        let mut k = 0;
        while k < comp.len() {
            let i = comp[k];
            for j in 0..members.len() {
                if !seen[j] && matrix[members[i]][members[j]] < threshold {
                    seen[j] = true;
                    comp.push(j);
                }
            }
            k += 1;
        }
        comp.sort_unstable();
        out.push(comp.into_iter().map(|i| members[i]).collect());
    }
    out
}

fn diameter(members: &[usize], matrix: &[Vec<f64>]) -> f64 {
    let mut d: f64 = 0.0;
    for (k, &i) in members.iter().enumerate() {
        for &j in &members[k + 1..] {
            d = d.max(matrix[i][j]);
        }
    }
    d
}

/// Single-linkage clusters at threshold `eps_mesh / 2`. A cluster whose
/// diameter is not below `eps_mesh` is split again at half the threshold,
/// so chains of close points cannot inflate the mesh.
pub fn cover_from_matrix(spokes: &[usize], matrix: &[Vec<f64>], eps_mesh: f64, gap_factor: f64) -> Result<BoundaryCover> {
    if !(eps_mesh > 0.0) {
        return Err(Error::InvalidParameter(format!("eps_mesh must be positive, got {eps_mesh}")));
    }
    if spokes.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let mut done: Vec<Vec<usize>> = Vec::new();
    let mut pending = vec![((0..spokes.len()).collect::<Vec<_>>(), 0u32)];
    let mut depth = 0;
    while let Some((members, level)) = pending.pop() {
        let threshold = eps_mesh / 2f64.powi(level as i32 + 1);
        for comp in components(&members, matrix, threshold) {
            if comp.len() == 1 || diameter(&comp, matrix) < eps_mesh {
                depth = depth.max(level);
                done.push(comp);
            } else if threshold == 0.0 {
                return Err(Error::Certificate("coincident boundary points cannot be separated".into()));
            } else {
                pending.push((comp, level + 1));
            }
        }
    }
    done.sort();
    let mesh = done.iter().map(|c| diameter(c, matrix)).fold(0.0, f64::max);
    let mut label = vec![0; spokes.len()];
    for (k, c) in done.iter().enumerate() {
        for &i in c {
            label[i] = k;
        }
    }
    let mut min_gap: Option<f64> = None;
    for i in 0..spokes.len() {
        for j in i + 1..spokes.len() {
            if label[i] != label[j] {
                min_gap = Some(min_gap.map_or(matrix[i][j], |g| g.min(matrix[i][j])));
            }
        }
    }
    let gap_lower_bound = min_gap.map(|g| g * gap_factor);
    if gap_lower_bound.is_some_and(|g| !(g > 0.0)) {
        return Err(Error::Certificate(format!("cluster gap {min_gap:?} is not certifiably positive")));
    }
    if !(mesh < eps_mesh) {
        return Err(Error::Certificate(format!("mesh {mesh} is not below {eps_mesh}")));
    }
    let clusters = done.into_iter().map(|c| c.into_iter().map(|i| spokes[i]).collect()).collect();
    Ok(BoundaryCover { eps_mesh, clusters, mesh, min_gap, gap_lower_bound, depth })
}

/// Factor bounding how much the portal discretization can inflate a visual
/// distance: each crossing of a gluing ray adds at most `epsilon` to a path
/// length, hence at most `epsilon / 2` per crossing to a product.
pub fn discretization_factor(metric: &PathMetric<'_>, params: &VisualMetricParams) -> f64 {
    let crossings = metric.spec().n_sectors.saturating_sub(1) as f64;
    params.a.powf(-0.5 * crossings * metric.epsilon())
}

/// Disjoint cover of `points` with every cluster of visual diameter below
/// `eps_mesh`.
pub fn zero_dim_cover(
    metric: &PathMetric<'_>,
    points: &[BoundaryPoint],
    eps_mesh: f64,
    params: &VisualMetricParams,
) -> Result<BoundaryCover> {
    let matrix = visual_matrix(metric, points, params)?;
    let spokes: Vec<usize> = points.iter().map(|p| p.spoke).collect();
    cover_from_matrix(&spokes, &matrix, eps_mesh, discretization_factor(metric, params))
}

/// CSV of a visual-distance matrix with spoke ids as the header.
pub fn matrix_csv(points: &[BoundaryPoint], matrix: &[Vec<f64>]) -> String {
    let mut out = String::from("spoke");
    for p in points {
        out.push_str(&format!(",{}", p.spoke));
    }
    out.push('\n');
    for (p, row) in points.iter().zip(matrix) {
        out.push_str(&p.spoke.to_string());
        for d in row {
            out.push_str(&format!(",{d}"));
        }
        out.push('\n');
    }
    out
}
