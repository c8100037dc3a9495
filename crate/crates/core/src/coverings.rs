//! Finite-scale covering certificates: nets of regions of the comb, a
//! constructive bounded cover with its measured d-multiplicity, and an exact
//! search for decompositions into two d-disconnected families.

use std::collections::{BTreeMap, VecDeque};
use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::comb::{inner_ball_center, CombSpec, LocatedPoint, RADIAL_TOL};
use crate::error::{Error, Result};
use crate::hyperbolic::{polar_dist, PolarPoint};
use crate::path_metric::PathMetric;

/// Tolerance on net separation.
pub const SEPARATION_TOL: f64 = 1e-6;

/// Safety factor on the angular width of brick cells.
const CELL_MARGIN: f64 = 1.05;

/// A region of the comb to be sampled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    Point { point: LocatedPoint },
    /// Points of the comb within plane distance `radius` of the basepoint.
    BasepointBall { radius: f64 },
    /// Ball about the inscribed center of one sector; must lie in that sector.
    SectorBall { sector: usize, radius: f64 },
}

fn ring_radii(top: f64, h: f64) -> Vec<f64> {
    let k = (top / h).floor() as usize;
    let mut out: Vec<f64> = (0..=k).map(|i| i as f64 * h).filter(|&r| r <= top).collect();
    if top - out.last().copied().unwrap_or(0.0) > 1e-12 {
        out.push(top);
    }
    out
}

/// Grid over the part of the comb within `cap` of the basepoint: polar rings
/// in every sector with radial and arc steps at most `h`, and points every
/// `h` along each hair. Points on a shared ray are emitted once.
pub fn comb_probes(spec: &CombSpec, cap: f64, h: f64) -> Vec<LocatedPoint> {
    let mut out = Vec::new();
    for s in &spec.sectors {
        let top = s.truncation_radius.min(cap);
        let shared = if s.index > 1 { spec.sectors[s.index - 2].truncation_radius } else { -1.0 };
        for r in ring_radii(top, h) {
            if r == 0.0 {
                if s.index == 1 {
                    out.push(LocatedPoint::BASEPOINT);
                }
                continue;
            }
            let m = (s.alpha * r.sinh() / h).ceil().max(1.0) as usize;
            for i in 0..=m {
                if i == 0 && r <= shared + RADIAL_TOL {
                    continue;
                }
                let phi = if i == m { s.theta_hi } else { s.theta_lo + s.alpha * i as f64 / m as f64 };
                out.push(LocatedPoint::InSector { sector: s.index, position: PolarPoint::new_unchecked(r, phi) });
            }
        }
    }
    let top = spec.r_max.min(cap);
    for ray in spec.spokes() {
        if ray.attach_radius >= top {
            continue;
        }
        for t in ring_radii(top - ray.attach_radius, h).into_iter().skip(1) {
            out.push(LocatedPoint::OnSpoke { spoke: ray.id, t: ray.attach_radius + t });
        }
    }
    out
}

/// Grid over a region at spacing `h`.
pub fn region_probes(spec: &CombSpec, region: &Region, h: f64) -> Result<Vec<LocatedPoint>> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!("probe spacing must be positive, got {h}")));
    }
    match *region {
        Region::Point { point } => {
            spec.ensure_contains(&point)?;
            Ok(vec![point])
        }
        Region::BasepointBall { radius } => {
            if !(radius >= 0.0) {
                return Err(Error::InvalidParameter(format!("radius must be non-negative, got {radius}")));
            }
            Ok(comb_probes(spec, radius, h))
        }
        Region::SectorBall { sector, radius } => {
            let s = spec.sector(sector)?;
            if !(radius >= 0.0) || radius > sector as f64 + RADIAL_TOL {
                return Err(Error::NotContained(format!("ball of radius {radius} in sector {sector}")));
            }
            let c = inner_ball_center(sector)?;
            let mut out = Vec::new();
            for rho in ring_radii(radius, h) {
                if rho == 0.0 {
                    out.push(LocatedPoint::InSector { sector, position: c });
                    continue;
                }
                let m = (TAU * rho.sinh() / h).ceil().max(3.0) as usize;
                for k in 0..m {
                    let position = c.offset(rho, TAU * k as f64 / m as f64);
                    if s.contains_position(&position) {
                        out.push(LocatedPoint::InSector { sector, position });
                    }
                }
            }
            Ok(out)
        }
    }
}

fn pairwise(metric: &PathMetric<'_>, points: &[LocatedPoint]) -> Result<Vec<Vec<f64>>> {
    points
        .par_iter()
        .map(|p| points.iter().map(|q| metric.dist(p, q)).collect())
        .collect()
}

/// A separated, covering subset of a region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Net {
    pub scale: f64,
    pub epsilon: f64,
    pub region: Region,
    pub points: Vec<LocatedPoint>,
    pub distances: Vec<Vec<f64>>,
    pub probe_spacing: f64,
    pub probe_count: usize,
    /// Largest distance from a probe to the net.
    pub covering_radius: f64,
    /// Smallest distance between two net points; absent for one point.
    pub min_separation: Option<f64>,
}

/// Greedy farthest-point net at scale `s`, drawn from a probe grid at
/// spacing `s / 2`. Separation and covering radius are checked on the grid.
pub fn build_net(metric: &PathMetric<'_>, region: &Region, s: f64) -> Result<Net> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::InvalidParameter(format!("net scale must be positive, got {s}")));
    }
    let probes = region_probes(metric.spec(), region, 0.5 * s)?;
    if probes.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let mut nearest = vec![f64::INFINITY; probes.len()];
    let mut chosen = Vec::new();
    let mut next = 0;
    let covering_radius = loop {
        chosen.push(next);
        let field = metric.field(&probes[next])?;
        let d: Vec<f64> = probes.par_iter().map(|q| field.dist_to(q)).collect::<Result<_>>()?;
        for (slot, di) in nearest.iter_mut().zip(d) {
            *slot = slot.min(di);
        }
        let (arg, far) = nearest
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        if far < s {
            break far;
        }
        next = arg;
    };
    let points: Vec<LocatedPoint> = chosen.iter().map(|&i| probes[i]).collect();
    let distances = pairwise(metric, &points)?;
    let min_separation = (0..points.len())
        .flat_map(|i| (i + 1..points.len()).map(move |j| (i, j)))
        .map(|(i, j)| distances[i][j])
        .reduce(f64::min);
    if min_separation.is_some_and(|m| m < s - SEPARATION_TOL) {
        return Err(Error::Certificate(format!("net separation {min_separation:?} below {s}")));
    }
    Ok(Net {
        scale: s,
        epsilon: metric.epsilon(),
        region: *region,
        points,
        distances,
        probe_spacing: 0.5 * s,
        probe_count: probes.len(),
        covering_radius,
        min_separation,
    })
}

/// Identifier of one set of the constructive cover.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BlockId {
    /// Angular cell `cell` of radial band `band` of the sector part.
    Cell { band: usize, cell: i64 },
    /// Interval `interval` (counted from the attachment) of one hair.
    Hair { spoke: usize, interval: usize },
}

impl BlockId {
    /// Hair intervals alternate between two families.
    pub fn family(&self) -> Option<u8> {
        match *self {
            BlockId::Cell { .. } => None,
            BlockId::Hair { interval, .. } => Some(1 + (interval % 2) as u8),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub inner: f64,
    pub outer: f64,
    pub cells: u64,
    pub cell_angle: f64,
    /// Angle of one cell boundary; boundaries repeat every `cell_angle`.
    pub offset: f64,
}

/// Brick pattern on the sector part: radial bands of width `4d`, each cut
/// into equal angular cells. Cell counts grow by integer factors from band
/// to band and boundaries shift by half a cell, so the boundaries of
/// neighbouring bands stay half a cell apart. Cells are as narrow as allowed
/// while still more than four times the angular radius of a d-ball touching
/// the band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrickLayout {
    pub d: f64,
    pub band_width: f64,
    pub total_angle: f64,
    pub bands: Vec<Band>,
}

impl BrickLayout {
    pub fn new(spec: &CombSpec, d: f64) -> Result<Self> {
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::InvalidParameter(format!("scale d must be positive, got {d}")));
        }
        let w = 4.0 * d;
        let total = spec.total_angle();
        let top = spec.sectors.iter().map(|s| s.truncation_radius).fold(0.0, f64::max);
        let count = (top / w).floor() as usize + 1;
        let mut bands = vec![Band { inner: 0.0, outer: w, cells: 1, cell_angle: total, offset: 0.0 }];
        for j in 1..count {
            let inner = j as f64 * w;
            let half_width = (d.sinh() / (inner - d).sinh()).min(1.0).asin();
            let prev = &bands[j - 1];
            let factor = ((prev.cell_angle / (CELL_MARGIN * 4.0 * half_width)).floor() as u64).max(1);
            let cells = prev.cells * factor;
            let cell_angle = total / cells as f64;
            let offset = (prev.offset + 0.5 * cell_angle).rem_euclid(cell_angle);
            bands.push(Band { inner, outer: inner + w, cells, cell_angle, offset });
        }
        Ok(BrickLayout { d, band_width: w, total_angle: total, bands })
    }

    fn cell_of(&self, p: &PolarPoint) -> BlockId {
        let band = ((p.rho / self.band_width).floor() as usize).min(self.bands.len() - 1);
        if band == 0 {
            return BlockId::Cell { band, cell: 0 };
        }
        let b = &self.bands[band];
        BlockId::Cell { band, cell: ((p.phi - b.offset) / b.cell_angle).floor() as i64 }
    }

    /// The block containing `p`. The first hair interval joins the cell of
    /// its attachment point.
    pub fn block_of(&self, spec: &CombSpec, p: &LocatedPoint) -> Result<BlockId> {
        match *p {
            LocatedPoint::InSector { position, .. } => Ok(self.cell_of(&position)),
            LocatedPoint::OnSpoke { spoke, t } => {
                let ray = spec.spoke(spoke)?;
                let interval = ((t - ray.attach_radius).max(0.0) / self.band_width).floor() as usize;
                if interval == 0 {
                    Ok(self.cell_of(&ray.attach_point()))
                } else {
                    Ok(BlockId::Hair { spoke, interval })
                }
            }
        }
    }
}

/// Neighbour lookups over a probe set.
struct ProbeIndex {
    bin: f64,
    /// Sector-part probes binned by radius, each bin sorted by angle:
    /// `(phi, rho, probe index)`.
    sector_bins: Vec<Vec<(f64, f64, usize)>>,
    /// Attachment points of spokes carrying probes, binned the same way:
    /// `(phi, rho, spoke)`.
    attach_bins: Vec<Vec<(f64, f64, usize)>>,
    /// Hair probes per spoke, sorted by hair length: `(t - attach, index)`.
    hairs: BTreeMap<usize, Vec<(f64, usize)>>,
}

impl ProbeIndex {
    fn new(spec: &CombSpec, probes: &[LocatedPoint], bin: f64) -> Result<Self> {
        let mut sector: Vec<(f64, f64, usize)> = Vec::new();
        let mut hairs: BTreeMap<usize, Vec<(f64, usize)>> = BTreeMap::new();
        for (i, p) in probes.iter().enumerate() {
            match *p {
                LocatedPoint::InSector { position, .. } => sector.push((position.phi, position.rho, i)),
                LocatedPoint::OnSpoke { spoke, t } => {
                    let a = spec.spoke(spoke)?.attach_radius;
                    hairs.entry(spoke).or_default().push(((t - a).max(0.0), i));
                }
            }
        }
        let mut attach = Vec::new();
        for list in hairs.values_mut() {
            list.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        }
        for &spoke in hairs.keys() {
            let p = spec.spoke(spoke)?.attach_point();
            attach.push((p.phi, p.rho, spoke));
        }
        Ok(ProbeIndex { bin, sector_bins: Self::binned(sector, bin), attach_bins: Self::binned(attach, bin), hairs })
    }

    fn binned(entries: Vec<(f64, f64, usize)>, bin: f64) -> Vec<Vec<(f64, f64, usize)>> {
        let mut bins: Vec<Vec<(f64, f64, usize)>> = Vec::new();
        for e in entries {
            let k = (e.1 / bin).floor() as usize;
            if bins.len() <= k {
                bins.resize_with(k + 1, Vec::new);
            }
            bins[k].push(e);
        }
        for b in &mut bins {
            b.sort_by(|a, c| a.0.total_cmp(&c.0).then(a.2.cmp(&c.2)));
        }
        bins
    }

    /// Entries within plane distance `r` of `x`.
    fn within(bins: &[Vec<(f64, f64, usize)>], bin: f64, x: &PolarPoint, r: f64, mut f: impl FnMut(usize)) {
        if bins.is_empty() || r < 0.0 {
            return;
        }
        let lo_bin = ((x.rho - r) / bin).floor().max(0.0) as usize;
        let hi_bin = (((x.rho + r) / bin).floor() as usize).min(bins.len() - 1);
        let s = (0.5 * r).sinh().powi(2);
        for (k, entries) in bins.iter().enumerate().take(hi_bin + 1).skip(lo_bin) {
            let inner = k as f64 * bin;
            // sinh²(d/2) ≥ sinh ρ₁ sinh ρ₂ sin²(Δφ/2) bounds the angular gap.
            let bound = s / (x.rho.sinh() * inner.sinh());
            let (from, to) = if bound.is_finite() && bound < 1.0 {
                let dphi = 2.0 * bound.sqrt().asin();
                (
                    entries.partition_point(|e| e.0 < x.phi - dphi),
                    entries.partition_point(|e| e.0 <= x.phi + dphi),
                )
            } else {
                (0, entries.len())
            };
            for e in &entries[from..to] {
                if polar_dist(x, &PolarPoint::new_unchecked(e.1, e.0)) <= r + 1e-12 {
                    f(e.2);
                }
            }
        }
    }

    /// Probes within path distance `d - used` of the sector point `src`
    /// (given with its plane position).
    fn from_sector(
        &self,
        metric: &PathMetric<'_>,
        probes: &[LocatedPoint],
        src: &LocatedPoint,
        pos: &PolarPoint,
        used: f64,
        d: f64,
        out: &mut Vec<usize>,
    ) -> Result<()> {
        let spec = metric.spec();
        let r = d - used;
        let mut err = None;
        Self::within(&self.sector_bins, self.bin, pos, r, |i| {
            match metric.dist(src, &probes[i]) {
                Ok(x) if used + x <= d => out.push(i),
                Ok(_) => {}
                Err(e) => err = Some(e),
            }
        });
        let mut spokes = Vec::new();
        Self::within(&self.attach_bins, self.bin, pos, r, |s| spokes.push(s));
        for s in spokes {
            let ray = spec.spoke(s)?;
            let v = LocatedPoint::OnSpoke { spoke: s, t: ray.attach_radius };
            let reach = d - used - metric.dist(src, &v)?;
            for &(h, i) in &self.hairs[&s] {
                if h > reach {
                    break;
                }
                out.push(i);
            }
        }
        err.map_or(Ok(()), Err)
    }

    /// Indices of probes within path distance `d` of `c`.
    fn ball(&self, metric: &PathMetric<'_>, probes: &[LocatedPoint], c: &LocatedPoint, d: f64) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        match *c {
            LocatedPoint::InSector { position, .. } => self.from_sector(metric, probes, c, &position, 0.0, d, &mut out)?,
            LocatedPoint::OnSpoke { spoke, t } => {
                let ray = metric.spec().spoke(spoke)?;
                let h = (t - ray.attach_radius).max(0.0);
                if let Some(list) = self.hairs.get(&spoke) {
                    out.extend(list.iter().filter(|e| (e.0 - h).abs() <= d).map(|e| e.1));
                }
                if h <= d {
                    let v = LocatedPoint::OnSpoke { spoke, t: ray.attach_radius };
                    self.from_sector(metric, probes, &v, &ray.attach_point(), h, d, &mut out)?;
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }
}

/// Largest number of blocks met by a d-ball about a probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplicityCertificate {
    pub d: f64,
    pub multiplicity: usize,
    pub center_count: usize,
    /// `histogram[k]` centers meet exactly `k` blocks.
    pub histogram: Vec<u64>,
    pub worst_center: LocatedPoint,
    pub worst_blocks: Vec<BlockId>,
}

/// Maximum over probe centers of the number of distinct blocks having a
/// probe within path distance `d`. Probes should sample the covered region
/// at spacing at most `d / 2`.
pub fn d_multiplicity(
    metric: &PathMetric<'_>,
    labeled: &[(LocatedPoint, BlockId)],
    d: f64,
) -> Result<MultiplicityCertificate> {
    if labeled.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let probes: Vec<LocatedPoint> = labeled.iter().map(|e| e.0).collect();
    let index = ProbeIndex::new(metric.spec(), &probes, d.max(1e-3))?;
    let met: Vec<Vec<BlockId>> = probes
        .par_iter()
        .map(|c| {
            let mut blocks: Vec<BlockId> = index.ball(metric, &probes, c, d)?.into_iter().map(|i| labeled[i].1).collect();
            blocks.sort_unstable();
            blocks.dedup();
            Ok(blocks)
        })
        .collect::<Result<_>>()?;
    let mut worst = 0;
    let mut histogram = Vec::new();
    for (i, m) in met.iter().enumerate() {
        if histogram.len() <= m.len() {
            histogram.resize(m.len() + 1, 0);
        }
        histogram[m.len()] += 1;
        if m.len() > met[worst].len() {
            worst = i;
        }
    }
    Ok(MultiplicityCertificate {
        d,
        multiplicity: met[worst].len(),
        center_count: probes.len(),
        histogram,
        worst_center: probes[worst],
        worst_blocks: met[worst].clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSummary {
    pub id: BlockId,
    pub family: Option<u8>,
    pub probes: usize,
    pub diameter: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum AnchorKey {
    Probe(usize),
    Spoke(usize),
}

/// Diameter of a probe set. Hair probes are reduced to their attachment
/// plus the longest and shortest hair length, which is exact because a hair
/// is only entered through its attachment.
fn set_diameter(metric: &PathMetric<'_>, points: &[&LocatedPoint]) -> Result<f64> {
    let spec = metric.spec();
    let mut anchors: BTreeMap<AnchorKey, (LocatedPoint, f64, f64)> = BTreeMap::new();
    for (i, p) in points.iter().enumerate() {
        let (key, at, off) = match **p {
            LocatedPoint::InSector { .. } => (AnchorKey::Probe(i), **p, 0.0),
            LocatedPoint::OnSpoke { spoke, t } => {
                let a = spec.spoke(spoke)?.attach_radius;
                (AnchorKey::Spoke(spoke), LocatedPoint::OnSpoke { spoke, t: a }, (t - a).max(0.0))
            }
        };
        let e = anchors.entry(key).or_insert((at, off, off));
        e.1 = e.1.min(off);
        e.2 = e.2.max(off);
    }
    let list: Vec<(LocatedPoint, f64, f64)> = anchors.into_values().collect();
    let own = list.iter().map(|e| e.2 - e.1).fold(0.0, f64::max);
    let cross = (0..list.len())
        .into_par_iter()
        .map(|i| {
            let field = metric.field(&list[i].0)?;
            let mut best: f64 = 0.0;
            for other in &list[i + 1..] {
                best = best.max(list[i].2 + other.2 + field.dist_to(&other.0)?);
            }
            Ok(best)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(cross.into_iter().fold(own, f64::max))
}

/// Diameters of the blocks of a labeled probe set.
pub fn block_diameters(metric: &PathMetric<'_>, labeled: &[(LocatedPoint, BlockId)]) -> Result<Vec<BlockSummary>> {
    let mut groups: BTreeMap<BlockId, Vec<&LocatedPoint>> = BTreeMap::new();
    for (p, b) in labeled {
        groups.entry(*b).or_default().push(p);
    }
    groups
        .into_par_iter()
        .map(|(id, pts)| {
            Ok(BlockSummary { id, family: id.family(), probes: pts.len(), diameter: set_diameter(metric, &pts)? })
        })
        .collect()
}

/// Constructive cover of the comb with its certificates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Covering {
    pub d: f64,
    pub epsilon: f64,
    pub layout: BrickLayout,
    pub probe_spacing: f64,
    pub probe_count: usize,
    pub block_count: usize,
    pub blocks: Vec<BlockSummary>,
    /// Largest block diameter.
    pub mesh: f64,
    /// `mesh / d`.
    pub mesh_ratio: f64,
    pub multiplicity: MultiplicityCertificate,
    /// Multiplicity at most 3 and finite mesh.
    pub certified: bool,
}

pub const MULTIPLICITY_BOUND: usize = 3;

/// Labels a probe grid at spacing `d / 2` with the brick layout, measures
/// every block diameter and the d-multiplicity over all probe centers.
pub fn build_cover(metric: &PathMetric<'_>, d: f64) -> Result<Covering> {
    let spec = metric.spec();
    let layout = BrickLayout::new(spec, d)?;
    let probes = comb_probes(spec, f64::INFINITY, 0.5 * d);
    let labeled: Vec<(LocatedPoint, BlockId)> =
        probes.into_iter().map(|p| Ok((p, layout.block_of(spec, &p)?))).collect::<Result<_>>()?;
    let blocks = block_diameters(metric, &labeled)?;
    let multiplicity = d_multiplicity(metric, &labeled, d)?;
    let mesh = blocks.iter().map(|b| b.diameter).fold(0.0, f64::max);
    let certified = multiplicity.multiplicity <= MULTIPLICITY_BOUND && mesh.is_finite();
    Ok(Covering {
        d,
        epsilon: metric.epsilon(),
        layout,
        probe_spacing: 0.5 * d,
        probe_count: labeled.len(),
        block_count: blocks.len(),
        blocks,
        mesh,
        mesh_ratio: mesh / d,
        multiplicity,
        certified,
    })
}

/// Outcome of the two-family decomposition search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    /// `families[i]` is 1 or 2; `blocks` lists the blocks of the witness.
    Sat { families: Vec<u8>, blocks: Vec<Vec<usize>> },
    Unsat,
    /// The node budget ran out first.
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionVerdict {
    #[serde(flatten)]
    pub verdict: Verdict,
    pub d: f64,
    #[serde(rename = "D")]
    pub diameter_bound: f64,
    pub budget: u64,
    pub nodes_explored: u64,
    pub point_count: usize,
}

fn check_matrix(m: &[Vec<f64>]) -> Result<()> {
    for (i, row) in m.iter().enumerate() {
        if row.len() != m.len() {
            return Err(Error::InvalidParameter(format!("distance row {i} has {} entries, expected {}", row.len(), m.len())));
        }
        if row.iter().any(|x| !(x >= &0.0) || !x.is_finite()) {
            return Err(Error::InvalidParameter(format!("distance row {i} has an invalid entry")));
        }
    }
    Ok(())
}

struct Block {
    members: Vec<usize>,
    diameter: f64,
    alive: bool,
}

struct Undo {
    point: usize,
    merged: Vec<usize>,
}

const UNASSIGNED: u8 = u8::MAX;

struct Search<'m> {
    dist: &'m [Vec<f64>],
    d: f64,
    bound: f64,
    order: Vec<usize>,
    family: Vec<u8>,
    block_of: Vec<usize>,
    blocks: Vec<Block>,
    nodes: u64,
    budget: u64,
}

impl Search<'_> {
    /// Puts `p` into family `f`, merging every block of `f` with a point
    /// closer than `d`. Fails when the merged block is too wide.
    fn assign(&mut self, k: usize, f: u8) -> Option<Undo> {
        let p = self.order[k];
        let mut merged: Vec<usize> = self.order[..k]
            .iter()
            .filter(|&&q| self.family[q] == f && self.dist[p][q] < self.d)
            .map(|&q| self.block_of[q])
            .collect();
        merged.sort_unstable();
        merged.dedup();
        let mut diameter: f64 = 0.0;
        for &b in &merged {
            diameter = diameter.max(self.blocks[b].diameter);
            for &q in &self.blocks[b].members {
                diameter = diameter.max(self.dist[p][q]);
            }
        }
        for (x, &a) in merged.iter().enumerate() {
            for &b in &merged[x + 1..] {
                for &u in &self.blocks[a].members {
                    for &v in &self.blocks[b].members {
                        diameter = diameter.max(self.dist[u][v]);
                    }
                }
            }
        }
        if diameter > self.bound {
            return None;
        }
        let id = self.blocks.len();
        let mut members = vec![p];
        for &b in &merged {
            self.blocks[b].alive = false;
            members.extend_from_slice(&self.blocks[b].members);
        }
        for &q in &members {
            self.block_of[q] = id;
        }
        self.blocks.push(Block { members, diameter, alive: true });
        self.family[p] = f;
        Some(Undo { point: p, merged })
    }

    fn undo(&mut self, u: Undo) {
        self.blocks.pop();
        for b in u.merged {
            self.blocks[b].alive = true;
            for i in 0..self.blocks[b].members.len() {
                let q = self.blocks[b].members[i];
                self.block_of[q] = b;
            }
        }
        self.family[u.point] = UNASSIGNED;
    }

    /// `Some(true)` on a full assignment, `Some(false)` when the subtree is
    /// exhausted, `None` when the budget runs out.
    fn run(&mut self, k: usize) -> Option<bool> {
        if k == self.order.len() {
            return Some(true);
        }
        // The first point is fixed to the first family.
        let families: &[u8] = if k == 0 { &[0] } else { &[0, 1] };
        for &f in families {
            if self.nodes >= self.budget {
                return None;
            }
            self.nodes += 1;
            if let Some(u) = self.assign(k, f) {
                match self.run(k + 1) {
                    Some(true) => return Some(true),
                    Some(false) => self.undo(u),
                    None => return None,
                }
            }
        }
        Some(false)
    }
}

/// Breadth-first order over the "closer than d" graph, so constraints are
/// met early in the search.
fn search_order(dist: &[Vec<f64>], d: f64) -> Vec<usize> {
    let n = dist.len();
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            order.push(i);
            for j in 0..n {
                if !seen[j] && dist[i][j] < d {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }
    order
}

/// Exact search for a split of the points into two families such that, in
/// each family, the blocks formed by chaining points closer than `d` all
/// have diameter at most `bound`. Distinct blocks of one family are then at
/// least `d` apart.
pub fn decomposition_search(dist: &[Vec<f64>], d: f64, bound: f64, budget: u64) -> Result<DecompositionVerdict> {
    check_matrix(dist)?;
    if !(d > 0.0) || !(bound >= 0.0) || budget == 0 {
        return Err(Error::InvalidParameter(format!("need d > 0, D >= 0, budget > 0; got {d}, {bound}, {budget}")));
    }
    let n = dist.len();
    let mut search = Search {
        dist,
        d,
        bound,
        order: search_order(dist, d),
        family: vec![UNASSIGNED; n],
        block_of: vec![usize::MAX; n],
        blocks: Vec::new(),
        nodes: 0,
        budget,
    };
    let verdict = match search.run(0) {
        Some(true) => {
            let families: Vec<u8> = search.family.iter().map(|&f| f + 1).collect();
            let blocks = verify_decomposition(dist, d, bound, &families).map_err(Error::Certificate)?;
            Verdict::Sat { families, blocks }
        }
        Some(false) => Verdict::Unsat,
        None => Verdict::Unknown,
    };
    Ok(DecompositionVerdict { verdict, d, diameter_bound: bound, budget, nodes_explored: search.nodes, point_count: n })
}

/// Search over the pairwise distances of a net.
pub fn decompose_net(net: &Net, d: f64, bound: f64, budget: u64) -> Result<DecompositionVerdict> {
    decomposition_search(&net.distances, d, bound, budget)
}

/// Independent check of a two-family witness. Returns the blocks (sorted
/// point lists) on success.
pub fn verify_decomposition(dist: &[Vec<f64>], d: f64, bound: f64, families: &[u8]) -> std::result::Result<Vec<Vec<usize>>, String> {
    let n = dist.len();
    if families.len() != n {
        return Err(format!("witness has {} labels for {n} points", families.len()));
    }
    if let Some(f) = families.iter().find(|&&f| f != 1 && f != 2) {
        return Err(format!("family label {f} is not 1 or 2"));
    }
    // Union-find over same-family pairs closer than d.
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if families[i] == families[j] && dist[i][j] < d {
                let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = root(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let blocks: Vec<Vec<usize>> = groups.into_values().collect();
    for b in &blocks {
        for (x, &i) in b.iter().enumerate() {
            for &j in &b[x + 1..] {
                if dist[i][j] > bound {
                    return Err(format!("points {i} and {j} share a block at distance {} > {bound}", dist[i][j]));
                }
            }
        }
    }
    for (x, a) in blocks.iter().enumerate() {
        for b in &blocks[x + 1..] {
            if families[a[0]] != families[b[0]] {
                continue;
            }
            for &i in a {
                for &j in b {
                    if dist[i][j] < d {
                        return Err(format!("blocks of family {} meet at distance {}", families[i], dist[i][j]));
                    }
                }
            }
        }
    }
    Ok(blocks)
}
