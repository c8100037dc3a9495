//! The intrinsic path metric of the comb.
//!
//! Every truncated sector is convex in the hyperbolic plane, so two points of
//! one sector are joined by the plane geodesic and a hair is a segment with
//! its own 1-D metric. A shortest path between different pieces bends only
//! where pieces are glued: on the shared initial segment of each interior ray
//! `aⱼ` (up to `Nⱼ₋₁`) and at hair attachment points. Hairs are dead ends, so a
//! hair point is reached through its attachment at a cost of `t - attach`.
//!
//! The gluing segments carry portal nodes at spacing `epsilon` (multiples of
//! `epsilon` plus the segment end, so halving `epsilon` refines the node set).
//! Portals of one sector are pairwise connected with exact plane distances.
//! The basepoint is a single node shared by all sectors.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::comb::{CombSpec, LocatedPoint, RADIAL_TOL};
use crate::error::{Error, Result};
use crate::hyperbolic::{polar_dist, PolarPoint};
use crate::sampling::{rng_for, CombSampler};

#[derive(Debug, Clone, Serialize)]
pub struct PortalNode {
    pub id: usize,
    /// Index `j` of the ray `aⱼ` carrying the node; 0 for the basepoint.
    pub ray: usize,
    pub position: PolarPoint,
    /// `(sector, index within that sector's node list)`.
    pub memberships: Vec<(usize, usize)>,
}

impl PortalNode {
    pub fn located(&self) -> LocatedPoint {
        let sector = self.memberships.first().map_or(1, |m| m.0);
        LocatedPoint::InSector { sector, position: self.position }
    }
}

#[derive(Debug, Clone)]
pub struct PortalGraph {
    epsilon: f64,
    provenance: String,
    nodes: Vec<PortalNode>,
    /// Node ids per sector (index `n - 1`).
    sector_nodes: Vec<Vec<usize>>,
    /// Dense intra-sector edge weights, row-major over `sector_nodes`.
    sector_weights: Vec<Vec<f64>>,
}

/// A polyline through the comb realizing a path-metric value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathWitness {
    pub polyline: Vec<LocatedPoint>,
    pub length: f64,
}

/// Where a query point meets the sector part of the comb.
#[derive(Debug, Clone)]
struct Anchor {
    position: PolarPoint,
    /// Length of hair between the query point and `position`.
    offset: f64,
    /// The attachment point, for hair points.
    attach: Option<LocatedPoint>,
    sectors: Vec<usize>,
}

fn anchor(spec: &CombSpec, p: &LocatedPoint) -> Result<Anchor> {
    let (position, offset, attach) = match *p {
        LocatedPoint::InSector { position, .. } => (position, 0.0, None),
        LocatedPoint::OnSpoke { spoke, t } => {
            let ray = spec.spoke(spoke)?;
            let at = ray.attach_point();
            let offset = (t - ray.attach_radius).max(0.0);
            let attach = (offset > 0.0).then(|| {
                let sector = spec.sectors_containing(&at).first().copied().unwrap_or(1);
                LocatedPoint::InSector { sector, position: at }
            });
            (at, offset, attach)
        }
    };
    let sectors = spec.sectors_containing(&position);
    if sectors.is_empty() {
        return Err(Error::NotContained(format!("{p:?}")));
    }
    Ok(Anchor { position, offset, attach, sectors })
}

fn shares_sector(a: &[usize], b: &[usize]) -> bool {
    a.iter().any(|s| b.contains(s))
}

/// Plane position of a point that belongs to the sector part of the comb:
/// sector points, and spoke points sitting at their attachment.
fn sector_form(spec: &CombSpec, p: &LocatedPoint) -> Result<Option<PolarPoint>> {
    match *p {
        LocatedPoint::InSector { position, .. } => Ok(Some(position)),
        LocatedPoint::OnSpoke { spoke, t } => {
            let ray = spec.spoke(spoke)?;
            Ok((t <= ray.attach_radius + RADIAL_TOL).then(|| ray.attach_point()))
        }
    }
}

/// Exact distance when both points lie on one piece: the plane distance for
/// two points of one truncated sector, `|t - t'|` for two points of one hair.
pub fn same_piece_dist(spec: &CombSpec, p: &LocatedPoint, q: &LocatedPoint) -> Result<Option<f64>> {
    spec.ensure_contains(p)?;
    spec.ensure_contains(q)?;
    if let (Some(pp), Some(qp)) = (sector_form(spec, p)?, sector_form(spec, q)?) {
        let ps = spec.sectors_containing(&pp);
        let qs = spec.sectors_containing(&qp);
        if shares_sector(&ps, &qs) {
            return Ok(Some(polar_dist(&pp, &qp)));
        }
    }
    match (*p, *q) {
        (LocatedPoint::OnSpoke { spoke: a, t: ta }, LocatedPoint::OnSpoke { spoke: b, t: tb }) if a == b => {
            Ok(Some((ta - tb).abs()))
        }
        _ => Ok(None),
    }
}

/// Orders a pair so that symmetric computations see the same operand order.
fn oriented<'p>(p: &'p LocatedPoint, q: &'p LocatedPoint) -> (&'p LocatedPoint, &'p LocatedPoint, bool) {
    let (a, b) = (p.order_key(), q.order_key());
    let swap = (a.0, a.1).cmp(&(b.0, b.1)).then(a.2.total_cmp(&b.2)).then(a.3.total_cmp(&b.3)) == Ordering::Greater;
    if swap {
        (q, p, true)
    } else {
        (p, q, false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapEntry {
    cost: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on (cost, node id).
        other.cost.total_cmp(&self.cost).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PortalGraph {
    pub fn build(spec: &CombSpec, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::InvalidEpsilon(epsilon));
        }
        let n = spec.n_sectors;
        let mut nodes = vec![PortalNode { id: 0, ray: 0, position: PolarPoint::ORIGIN, memberships: Vec::new() }];
        let mut sector_nodes: Vec<Vec<usize>> = vec![vec![0]; n];
        // Interior rays a₂..aₙ glue sector j-1 to sector j along [0, Nⱼ₋₁].
        for j in 2..=n {
            let lower = &spec.sectors[j - 2];
            let upper = &spec.sectors[j - 1];
            let len = lower.truncation_radius.min(upper.truncation_radius);
            let mut ts: Vec<f64> = (1..).map(|k| k as f64 * epsilon).take_while(|&t| t < len - 1e-12).collect();
            ts.push(len);
            for t in ts {
                let id = nodes.len();
                nodes.push(PortalNode {
                    id,
                    ray: j,
                    position: PolarPoint::new_unchecked(t, upper.theta_lo),
                    memberships: Vec::new(),
                });
                sector_nodes[j - 2].push(id);
                sector_nodes[j - 1].push(id);
            }
        }
        for (i, members) in sector_nodes.iter_mut().enumerate() {
            members.sort_unstable();
            for (local, &id) in members.iter().enumerate() {
                nodes[id].memberships.push((i + 1, local));
            }
        }
        let sector_weights = sector_nodes
            .par_iter()
            .map(|members| {
                let k = members.len();
                let mut w = vec![0.0; k * k];
                for a in 0..k {
                    for b in (a + 1)..k {
                        let d = polar_dist(&nodes[members[a]].position, &nodes[members[b]].position);
                        w[a * k + b] = d;
                        w[b * k + a] = d;
                    }
                }
                w
            })
            .collect();
        Ok(PortalGraph { epsilon, provenance: spec.hash(), nodes, sector_nodes, sector_weights })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Hash of the spec the graph was built from.
    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn nodes(&self) -> &[PortalNode] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn sector_nodes(&self, n: usize) -> &[usize] {
        &self.sector_nodes[n - 1]
    }

    pub fn edge_count(&self) -> usize {
        self.sector_nodes.iter().map(|m| m.len() * (m.len() - 1) / 2).sum()
    }

    /// Weight of the edge between two nodes sharing a sector, if any.
    pub fn edge_weight(&self, a: usize, b: usize) -> Option<f64> {
        let na = &self.nodes[a];
        let nb = &self.nodes[b];
        na.memberships.iter().find_map(|&(s, la)| {
            nb.memberships.iter().find(|m| m.0 == s).map(|&(_, lb)| {
                let k = self.sector_nodes[s - 1].len();
                self.sector_weights[s - 1][la * k + lb]
            })
        })
    }

    fn neighbors(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.nodes[u].memberships.iter().flat_map(move |&(s, local)| {
            let members = &self.sector_nodes[s - 1];
            let k = members.len();
            let row = &self.sector_weights[s - 1][local * k..(local + 1) * k];
            members.iter().zip(row).filter(move |(&v, _)| v != u).map(|(&v, &w)| (v, w))
        })
    }

    fn check_spec(&self, spec: &CombSpec) -> Result<()> {
        if spec.hash() != self.provenance {
            return Err(Error::InvalidParameter("portal graph was built for a different spec".into()));
        }
        Ok(())
    }

    /// Single-source shortest paths over the portal nodes.
    fn dijkstra(&self, sources: &[(usize, f64)]) -> (Vec<f64>, Vec<Option<usize>>) {
        let mut dist = vec![f64::INFINITY; self.nodes.len()];
        let mut prev = vec![None; self.nodes.len()];
        let mut heap = BinaryHeap::new();
        for &(u, c) in sources {
            if c < dist[u] {
                dist[u] = c;
                heap.push(HeapEntry { cost: c, node: u });
            }
        }
        while let Some(HeapEntry { cost, node }) = heap.pop() {
            if cost > dist[node] {
                continue;
            }
            for (v, w) in self.neighbors(node) {
                let c = cost + w;
                if c < dist[v] {
                    dist[v] = c;
                    prev[v] = Some(node);
                    heap.push(HeapEntry { cost: c, node: v });
                }
            }
        }
        (dist, prev)
    }

    /// Path-metric distance and a witness path, by Dijkstra over the portal
    /// graph with the two query points as temporary end nodes.
    pub fn dist_x(&self, spec: &CombSpec, p: &LocatedPoint, q: &LocatedPoint) -> Result<(f64, PathWitness)> {
        self.check_spec(spec)?;
        let (a, b, swapped) = oriented(p, q);
        let (value, mut witness) = self.dist_x_oriented(spec, a, b)?;
        if swapped {
            witness.polyline.reverse();
        }
        Ok((value, witness))
    }

    fn dist_x_oriented(&self, spec: &CombSpec, p: &LocatedPoint, q: &LocatedPoint) -> Result<(f64, PathWitness)> {
        if let Some(d) = same_piece_dist(spec, p, q)? {
            return Ok((d, PathWitness { polyline: vec![*p, *q], length: d }));
        }
        let ap = anchor(spec, p)?;
        let aq = anchor(spec, q)?;

        let mut best = f64::INFINITY;
        let mut best_via: Option<usize> = None;
        if shares_sector(&ap.sectors, &aq.sectors) {
            best = ap.offset + polar_dist(&ap.position, &aq.position) + aq.offset;
        }

        let mut sources = Vec::new();
        for &s in &ap.sectors {
            for &u in &self.sector_nodes[s - 1] {
                sources.push((u, ap.offset + polar_dist(&ap.position, &self.nodes[u].position)));
            }
        }
        let (dist, prev) = self.dijkstra(&sources);
        let mut exits: Vec<usize> = aq.sectors.iter().flat_map(|&s| self.sector_nodes[s - 1].iter().copied()).collect();
        exits.sort_unstable();
        exits.dedup();
        for v in exits {
            let c = dist[v] + polar_dist(&self.nodes[v].position, &aq.position) + aq.offset;
            if c < best {
                best = c;
                best_via = Some(v);
            }
        }
        if !best.is_finite() {
            return Err(Error::Disconnected);
        }

        let mut polyline = vec![*p];
        polyline.extend(ap.attach);
        if let Some(v) = best_via {
            let mut chain = vec![v];
            let mut cur = v;
            while let Some(u) = prev[cur] {
                chain.push(u);
                cur = u;
            }
            chain.reverse();
            polyline.extend(chain.into_iter().map(|u| self.nodes[u].located()));
        }
        polyline.extend(aq.attach);
        polyline.push(*q);
        polyline.dedup();
        let length = witness_length(spec, &polyline)?;
        Ok((best, PathWitness { polyline, length }))
    }

    /// All-pairs shortest paths between portal nodes, for bulk queries.
    pub fn into_metric(self, spec: &CombSpec) -> Result<PathMetric<'_>> {
        self.check_spec(spec)?;
        let v = self.nodes.len();
        let rows: Vec<Vec<f64>> = (0..v).into_par_iter().map(|u| self.dijkstra(&[(u, 0.0)]).0).collect();
        let mut table = vec![0.0; v * v];
        for a in 0..v {
            for b in 0..v {
                // Symmetrize away rounding differences between the two directions.
                table[a * v + b] = rows[a][b].min(rows[b][a]);
            }
        }
        if table.iter().any(|d| !d.is_finite()) {
            return Err(Error::Disconnected);
        }
        Ok(PathMetric { spec, graph: self, table })
    }
}

/// Sum of exact piecewise distances along a polyline whose consecutive points
/// share a piece.
pub fn witness_length(spec: &CombSpec, polyline: &[LocatedPoint]) -> Result<f64> {
    let mut total = 0.0;
    for pair in polyline.windows(2) {
        let step = match same_piece_dist(spec, &pair[0], &pair[1])? {
            Some(d) => d,
            None => {
                // A hair point next to its own attachment point.
                let pos = [spec.position(&pair[0])?, spec.position(&pair[1])?];
                let on_hair = |p: &LocatedPoint, other: &PolarPoint| match *p {
                    LocatedPoint::OnSpoke { spoke, .. } => {
                        spec.spoke(spoke).map(|s| (s.attach_point().rho - other.rho).abs() < 1e-9 && s.angle == other.phi)
                    }
                    _ => Ok(false),
                };
                if on_hair(&pair[0], &pos[1])? || on_hair(&pair[1], &pos[0])? {
                    (pos[0].rho - pos[1].rho).abs()
                } else {
                    return Err(Error::InvalidParameter(format!(
                        "witness steps between different pieces: {:?} -> {:?}",
                        pair[0], pair[1]
                    )));
                }
            }
        };
        total += step;
    }
    Ok(total)
}

/// Path metric with all portal-to-portal distances precomputed.
pub struct PathMetric<'a> {
    spec: &'a CombSpec,
    graph: PortalGraph,
    table: Vec<f64>,
}

impl<'a> PathMetric<'a> {
    pub fn new(spec: &'a CombSpec, epsilon: f64) -> Result<Self> {
        PortalGraph::build(spec, epsilon)?.into_metric(spec)
    }

    pub fn spec(&self) -> &'a CombSpec {
        self.spec
    }

    pub fn graph(&self) -> &PortalGraph {
        &self.graph
    }

    pub fn epsilon(&self) -> f64 {
        self.graph.epsilon
    }

    pub fn dist(&self, p: &LocatedPoint, q: &LocatedPoint) -> Result<f64> {
        let (a, b, _) = oriented(p, q);
        self.dist_oriented(a, b)
    }

    fn dist_oriented(&self, p: &LocatedPoint, q: &LocatedPoint) -> Result<f64> {
        if let Some(d) = same_piece_dist(self.spec, p, q)? {
            return Ok(d);
        }
        let ap = anchor(self.spec, p)?;
        let aq = anchor(self.spec, q)?;
        let mut best = f64::INFINITY;
        if shares_sector(&ap.sectors, &aq.sectors) {
            best = ap.offset + polar_dist(&ap.position, &aq.position) + aq.offset;
        }
        let entries = self.portal_costs(&ap);
        let exits = self.portal_costs(&aq);
        let v = self.graph.nodes.len();
        for &(u, cu) in &entries {
            let row = &self.table[u * v..(u + 1) * v];
            for &(w, cw) in &exits {
                let c = cu + row[w] + cw;
                if c < best {
                    best = c;
                }
            }
        }
        if !best.is_finite() {
            return Err(Error::Disconnected);
        }
        Ok(best)
    }

    /// Distances from `p` to every portal node, for repeated queries from
    /// one source. Agrees with [`PathMetric::dist`] up to rounding.
    pub fn field(&self, p: &LocatedPoint) -> Result<DistanceField<'_, 'a>> {
        self.spec.ensure_contains(p)?;
        let anchor = anchor(self.spec, p)?;
        let v = self.graph.nodes.len();
        let mut to_node = vec![f64::INFINITY; v];
        for (u, cu) in self.portal_costs(&anchor) {
            let row = &self.table[u * v..(u + 1) * v];
            for (slot, &d) in to_node.iter_mut().zip(row) {
                let c = cu + d;
                if c < *slot {
                    *slot = c;
                }
            }
        }
        Ok(DistanceField { metric: self, source: *p, anchor, to_node })
    }

    fn portal_costs(&self, a: &Anchor) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = a
            .sectors
            .iter()
            .flat_map(|&s| self.graph.sector_nodes[s - 1].iter())
            .map(|&u| (u, a.offset + polar_dist(&a.position, &self.graph.nodes[u].position)))
            .collect();
        out.sort_unstable_by_key(|e| e.0);
        out.dedup_by_key(|e| e.0);
        out
    }
}

/// Path distances from one fixed source point.
pub struct DistanceField<'m, 'a> {
    metric: &'m PathMetric<'a>,
    source: LocatedPoint,
    anchor: Anchor,
    to_node: Vec<f64>,
}

impl DistanceField<'_, '_> {
    pub fn source(&self) -> &LocatedPoint {
        &self.source
    }

    pub fn dist_to(&self, q: &LocatedPoint) -> Result<f64> {
        let spec = self.metric.spec;
        if let Some(d) = same_piece_dist(spec, &self.source, q)? {
            return Ok(d);
        }
        let aq = anchor(spec, q)?;
        let mut best = f64::INFINITY;
        if shares_sector(&self.anchor.sectors, &aq.sectors) {
            best = self.anchor.offset + polar_dist(&self.anchor.position, &aq.position) + aq.offset;
        }
        for (w, cw) in self.metric.portal_costs(&aq) {
            let c = self.to_node[w] + cw;
            if c < best {
                best = c;
            }
        }
        if !best.is_finite() {
            return Err(Error::Disconnected);
        }
        Ok(best)
    }
}

/// Comparison of the path metric at `epsilon` and `epsilon / 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementReport {
    pub epsilon: f64,
    pub sample_count: usize,
    pub seed: u64,
    /// Largest `d(ε) - d(ε/2)`.
    pub max_change: f64,
    /// Largest `d(ε/2) - d(ε)`; positive values break monotonicity.
    pub max_increase: f64,
    /// `max_change / ε`.
    pub constant: f64,
}

/// Evaluates `sample_count` random pairs at both portal spacings.
pub fn refinement_report(coarse: &PathMetric<'_>, fine: &PathMetric<'_>, sample_count: usize, seed: u64) -> Result<RefinementReport> {
    let spec = coarse.spec;
    if fine.spec.hash() != spec.hash() {
        return Err(Error::SpecMismatch);
    }
    let sampler = CombSampler::new(spec, spec.r_max);
    let diffs: Vec<f64> = (0..sample_count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, i);
            let p = sampler.sample(&mut rng);
            let q = sampler.sample(&mut rng);
            Ok(coarse.dist(&p, &q)? - fine.dist(&p, &q)?)
        })
        .collect::<Result<_>>()?;
    let max_change = diffs.iter().copied().fold(0.0, f64::max);
    let max_increase = diffs.iter().map(|d| -d).fold(0.0, f64::max);
    Ok(RefinementReport {
        epsilon: coarse.epsilon(),
        sample_count,
        seed,
        max_change,
        max_increase,
        constant: max_change / coarse.epsilon(),
    })
}

/// Quasi-isometry constants fitted over sampled pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QiReport {
    pub lambda: f64,
    pub c: f64,
    pub sample_count: usize,
    pub seed: u64,
    pub epsilon: f64,
    /// Largest observed `plane - path` gap; must not exceed rounding.
    pub lower_bound_violation: f64,
}

/// Fits `plane ≤ path ≤ λ·plane + c` over `sample_count` random pairs.
///
/// Among all feasible `(λ ≥ 1, c ≥ 0)` the pair minimizing `λ + c` is
/// reported. The feasible `c` for a given `λ` is the upper envelope of the
/// lines `path_i - λ·plane_i`, so the optimum sits at `λ = 1`, at a vertex of
/// that envelope, or where it crosses zero.
pub fn qi_constants(metric: &PathMetric<'_>, sample_count: usize, seed: u64) -> Result<QiReport> {
    if sample_count < 2 {
        return Err(Error::InvalidParameter("qi_constants needs at least two samples".into()));
    }
    let spec = metric.spec;
    let sampler = CombSampler::new(spec, spec.r_max);
    let pairs: Vec<(f64, f64)> = (0..sample_count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, i);
            let p = sampler.sample(&mut rng);
            let q = sampler.sample(&mut rng);
            Ok((spec.plane_dist(&p, &q)?, metric.dist(&p, &q)?))
        })
        .collect::<Result<_>>()?;
    let violation = pairs.iter().map(|&(plane, path)| plane - path).fold(0.0, f64::max);
    let (lambda, c) = fit_lambda_c(&pairs);
    Ok(QiReport { lambda, c, sample_count, seed, epsilon: metric.epsilon(), lower_bound_violation: violation })
}

fn fit_lambda_c(pairs: &[(f64, f64)]) -> (f64, f64) {
    let c_at = |lambda: f64| pairs.iter().map(|&(x, y)| y - lambda * x).fold(0.0, f64::max);
    let objective = |lambda: f64| lambda + c_at(lambda);

    // Upper envelope of y_i - λ x_i for λ ≥ 1, lines sorted by slope -x_i.
    let mut lines: Vec<(f64, f64)> = pairs.iter().map(|&(x, y)| (-x, y)).collect();
    lines.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    lines.dedup_by(|b, a| a.0 == b.0 && {
        a.1 = a.1.max(b.1);
        true
    });
    let mut hull: Vec<(f64, f64)> = Vec::new();
    let cross = |l1: (f64, f64), l2: (f64, f64)| (l2.1 - l1.1) / (l1.0 - l2.0);
    for l in lines {
        while hull.len() >= 2 {
            let n = hull.len();
            if cross(hull[n - 2], l) <= cross(hull[n - 2], hull[n - 1]) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(l);
    }
    let mut candidates = vec![1.0];
    for w in hull.windows(2) {
        candidates.push(cross(w[0], w[1]));
    }
    for l in &hull {
        if l.0 < 0.0 {
            candidates.push(l.1 / -l.0);
        }
    }
    let mut best = (1.0, c_at(1.0));
    let mut best_obj = objective(1.0);
    for lambda in candidates.into_iter().filter(|l| l.is_finite() && *l >= 1.0) {
        let obj = objective(lambda);
        if obj < best_obj {
            best_obj = obj;
            best = (lambda, c_at(lambda));
        }
    }
    best
}
