//! Certificate suites. Each runner returns a serializable report carrying a
//! `passed` flag and writes its JSON/CSV files into a bundle.

use std::collections::BTreeMap;

use anyhow::Result;
use clap::ValueEnum;
use comb_core::boundary::{
    boundary_points, cover_from_matrix, discretization_factor, matrix_csv, product_at_infinity, ray_gromov_product,
    visual_matrix, BoundaryCover, BoundaryPoint, VisualMetricParams,
};
use comb_core::coverings::{
    build_cover, build_net, decompose_net, verify_decomposition, BlockId, BlockSummary, Covering,
    DecompositionVerdict, MultiplicityCertificate, Region, Verdict, MULTIPLICITY_BOUND, SEPARATION_TOL,
};
use comb_core::hyperbolicity::{estimate_delta, estimate_plane_delta, DeltaEstimate};
use comb_core::path_metric::{qi_constants, refinement_report, PathMetric, QiReport, RefinementReport};
use comb_core::sampling::{rng_for, CombSampler};
use comb_core::{CombSpec, LocatedPoint};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::manifest::Bundle;

/// Largest admissible distance from a point of the comb to a spoke ray.
pub const VISUAL_BOUND: f64 = 1.0 + 1e-6;
/// Allowed growth of the defect when the sampling radius doubles.
pub const PLATEAU_SLACK: f64 = 1.0;
/// Upper bound on the defect of the hyperbolic plane control run.
pub const PLANE_DELTA_BOUND: f64 = 1.0;
/// Slack for rounding when comparing path and plane distances.
pub const ROUNDING_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VisualReport {
    pub samples: usize,
    pub seed: u64,
    pub bound: f64,
    pub max_distance: f64,
    pub mean_distance: f64,
    pub worst_point: LocatedPoint,
    pub worst_spoke: usize,
    pub passed: bool,
}

/// Distance from random comb points to their nearest spoke ray.
pub fn visual_check(spec: &CombSpec, samples: usize, seed: u64) -> Result<VisualReport> {
    anyhow::ensure!(samples > 0, "visual check needs at least one sample");
    let sampler = CombSampler::new(spec, spec.r_max);
    let mut max = (f64::NEG_INFINITY, LocatedPoint::BASEPOINT, 0);
    let mut sum = 0.0;
    for i in 0..samples as u64 {
        let p = sampler.sample(&mut rng_for(seed, i));
        let (spoke, d) = spec.nearest_spoke(&p)?;
        sum += d;
        if d > max.0 {
            max = (d, p, spoke);
        }
    }
    Ok(VisualReport {
        samples,
        seed,
        bound: VISUAL_BOUND,
        max_distance: max.0,
        mean_distance: sum / samples as f64,
        worst_point: max.1,
        worst_spoke: max.2,
        passed: max.0 <= VISUAL_BOUND,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeltaReport {
    pub full_cap: DeltaEstimate,
    pub half_cap: DeltaEstimate,
    pub plane: DeltaEstimate,
    pub plateau_slack: f64,
    pub plane_bound: f64,
    pub plateau_ok: bool,
    pub plane_ok: bool,
    pub passed: bool,
}

/// Defect estimates at `cap` and `cap / 2`, plus the plane control at `cap`.
pub fn delta_suite(metric: &PathMetric<'_>, samples: usize, cap: f64, seed: u64) -> Result<DeltaReport> {
    let full_cap = estimate_delta(metric, samples, cap, seed)?;
    let half_cap = estimate_delta(metric, samples, 0.5 * cap, seed)?;
    let plane = estimate_plane_delta(samples, cap, seed)?;
    let plateau_ok = full_cap.delta_max.is_finite() && full_cap.delta_max <= half_cap.delta_max + PLATEAU_SLACK;
    let plane_ok = plane.delta_max <= PLANE_DELTA_BOUND;
    Ok(DeltaReport {
        full_cap,
        half_cap,
        plane,
        plateau_slack: PLATEAU_SLACK,
        plane_bound: PLANE_DELTA_BOUND,
        plateau_ok,
        plane_ok,
        passed: plateau_ok && plane_ok,
    })
}

pub fn write_delta(bundle: &mut Bundle, report: &DeltaReport) -> Result<()> {
    bundle.write_json("delta.json", report)?;
    bundle.write("delta_histogram.csv", report.full_cap.histogram_csv().as_bytes())?;
    bundle.write("delta_plane_histogram.csv", report.plane.histogram_csv().as_bytes())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverLevel {
    pub k: u32,
    pub eps_mesh: f64,
    pub cluster_count: Option<usize>,
    pub cover: Option<BoundaryCover>,
    pub error: Option<String>,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilizationCheck {
    pub spoke_a: usize,
    pub spoke_b: usize,
    pub height_a: f64,
    pub height_b: f64,
    pub finite_product: f64,
    pub limit_product: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub spokes: usize,
    pub epsilon: f64,
    pub params: VisualMetricParams,
    pub gap_factor: f64,
    pub levels: Vec<CoverLevel>,
    pub stabilization: Vec<StabilizationCheck>,
    pub stabilization_tolerance: f64,
    pub stabilization_max_gap: f64,
    pub passed: bool,
}

/// Heights above the attachment at which finite products are compared,
/// clipped to the hair length.
const HEIGHTS: [(f64, f64); 3] = [(5.0, 5.0), (7.0, 11.0), (12.0, 6.5)];

/// Covers of the first `spokes` boundary points at mesh `2^-k`, `k = 1..=levels`,
/// and the agreement of finite ray products with their limits.
pub fn boundary_suite(
    metric: &PathMetric<'_>,
    spokes: usize,
    levels: u32,
    params: &VisualMetricParams,
) -> Result<(BoundaryReport, String)> {
    let spec = metric.spec();
    let points: Vec<BoundaryPoint> = boundary_points(spec).into_iter().take(spokes).collect();
    anyhow::ensure!(points.len() >= 2, "boundary suite needs at least two spokes");
    let matrix = visual_matrix(metric, &points, params)?;
    let ids: Vec<usize> = points.iter().map(|p| p.spoke).collect();
    let gap_factor = discretization_factor(metric, params);
    let levels: Vec<CoverLevel> = (1..=levels)
        .map(|k| {
            let eps_mesh = 0.5f64.powi(k as i32);
            match cover_from_matrix(&ids, &matrix, eps_mesh, gap_factor) {
                Ok(c) => CoverLevel {
                    k,
                    eps_mesh,
                    cluster_count: Some(c.clusters.len()),
                    passed: c.mesh < eps_mesh && c.min_gap.is_none_or(|g| g > 0.0),
                    cover: Some(c),
                    error: None,
                },
                Err(e) => CoverLevel { k, eps_mesh, cluster_count: None, cover: None, error: Some(e.to_string()), passed: false },
            }
        })
        .collect();

    let m = points.len();
    let mut stabilization = Vec::new();
    for j in 0..m.min(12) {
        let (a, b) = (points[j], points[(7 * j + 3) % m]);
        if a == b {
            continue;
        }
        let limit = product_at_infinity(metric, a, b)?;
        let (ra, rb) = (spec.spoke(a.spoke)?, spec.spoke(b.spoke)?);
        for (ha, hb) in HEIGHTS.map(|(x, y)| (x.min(spec.hair_extension), y.min(spec.hair_extension))) {
            let finite = ray_gromov_product(metric, a, ra.attach_radius + ha, b, rb.attach_radius + hb)?;
            stabilization.push(StabilizationCheck {
                spoke_a: a.spoke,
                spoke_b: b.spoke,
                height_a: ha,
                height_b: hb,
                finite_product: finite,
                limit_product: limit,
            });
        }
    }
    let tolerance = 2.0 * metric.epsilon();
    let max_gap = stabilization.iter().map(|s| (s.finite_product - s.limit_product).abs()).fold(0.0, f64::max);
    let passed = levels.iter().all(|l| l.passed) && max_gap <= tolerance;
    let report = BoundaryReport {
        spokes: points.len(),
        epsilon: metric.epsilon(),
        params: *params,
        gap_factor,
        levels,
        stabilization,
        stabilization_tolerance: tolerance,
        stabilization_max_gap: max_gap,
        passed,
    };
    Ok((report, matrix_csv(&points, &matrix)))
}

pub fn write_boundary(bundle: &mut Bundle, report: &BoundaryReport, csv: &str) -> Result<()> {
    bundle.write_json("boundary_covers.json", report)?;
    bundle.write("boundary_matrix.csv", csv.as_bytes())
}

/// Everything of a covering except the per-block list, which goes to CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverSummary {
    pub d: f64,
    pub epsilon: f64,
    pub sectors: usize,
    pub band_count: usize,
    pub probe_spacing: f64,
    pub probe_count: usize,
    pub block_count: usize,
    pub mesh: f64,
    pub mesh_ratio: f64,
    pub multiplicity: MultiplicityCertificate,
    pub multiplicity_bound: usize,
    pub certified: bool,
}

impl CoverSummary {
    pub fn new(c: &Covering, sectors: usize) -> Self {
        CoverSummary {
            d: c.d,
            epsilon: c.epsilon,
            sectors,
            band_count: c.layout.bands.len(),
            probe_spacing: c.probe_spacing,
            probe_count: c.probe_count,
            block_count: c.block_count,
            mesh: c.mesh,
            mesh_ratio: c.mesh_ratio,
            multiplicity: c.multiplicity.clone(),
            multiplicity_bound: MULTIPLICITY_BOUND,
            certified: c.certified && c.mesh.is_finite() && c.multiplicity.multiplicity <= MULTIPLICITY_BOUND,
        }
    }
}

pub fn blocks_csv(blocks: &[BlockSummary]) -> String {
    let mut out = String::from("kind,band_or_spoke,cell_or_interval,family,probes,diameter\n");
    for b in blocks {
        let (kind, a, c) = match b.id {
            BlockId::Cell { band, cell } => ("cell", band as i64, cell),
            BlockId::Hair { spoke, interval } => ("hair", spoke as i64, interval as i64),
        };
        let family = b.family.map(|f| f.to_string()).unwrap_or_default();
        out.push_str(&format!("{kind},{a},{c},{family},{},{}\n", b.probes, b.diameter));
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverReport {
    pub covers: Vec<CoverSummary>,
    pub passed: bool,
}

/// Constructive covers at each scale; writes one block CSV per scale.
pub fn cover_suite(metric: &PathMetric<'_>, scales: &[f64], bundle: &mut Bundle) -> Result<CoverReport> {
    let mut covers = Vec::new();
    for (i, &d) in scales.iter().enumerate() {
        let c = build_cover(metric, d)?;
        bundle.write(&format!("cover_blocks_{i}.csv"), blocks_csv(&c.blocks).as_bytes())?;
        covers.push(CoverSummary::new(&c, metric.spec().n_sectors));
    }
    let passed = covers.iter().all(|c| c.certified);
    let report = CoverReport { covers, passed };
    bundle.write_json("covers.json", &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LowerBoundReport {
    pub region: Region,
    pub scale: f64,
    pub net_points: Vec<LocatedPoint>,
    pub probe_count: usize,
    pub covering_radius: f64,
    pub min_separation: Option<f64>,
    pub decomposition: DecompositionVerdict,
    /// Outcome of the independent check of a SAT witness.
    pub witness_check: Option<String>,
    pub passed: bool,
}

/// Largest ball about a sector's inscribed center used for the lower bound.
pub fn lower_bound_region(spec: &CombSpec) -> Region {
    let sector = spec.n_sectors.min(4);
    Region::SectorBall { sector, radius: (sector as f64 - 0.5).min(3.0) }
}

/// Net of `region` at scale `s`, then the two-family decomposition search.
pub fn lower_bound_suite(
    metric: &PathMetric<'_>,
    region: &Region,
    s: f64,
    d: f64,
    bound: f64,
    budget: u64,
) -> Result<LowerBoundReport> {
    let net = build_net(metric, region, s)?;
    let decomposition = decompose_net(&net, d, bound, budget)?;
    let witness_check = match &decomposition.verdict {
        Verdict::Sat { families, .. } => Some(match verify_decomposition(&net.distances, d, bound, families) {
            Ok(blocks) => format!("verified: {} blocks", blocks.len()),
            Err(e) => format!("rejected: {e}"),
        }),
        _ => None,
    };
    let net_ok = net.covering_radius <= s && net.min_separation.is_none_or(|m| m >= s - SEPARATION_TOL);
    let witness_ok = witness_check.as_ref().is_none_or(|w| w.starts_with("verified"));
    Ok(LowerBoundReport {
        region: *region,
        scale: s,
        probe_count: net.probe_count,
        covering_radius: net.covering_radius,
        min_separation: net.min_separation,
        net_points: net.points,
        decomposition,
        witness_check,
        passed: net_ok && witness_ok,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QiSection {
    pub qi: QiReport,
    pub refinement: RefinementReport,
    pub change_bound: f64,
    pub passed: bool,
}

/// Quasi-isometry constants against the plane, and the effect of halving
/// the portal spacing.
pub fn qi_suite(metric: &PathMetric<'_>, samples: usize, refinement_samples: usize, seed: u64) -> Result<QiSection> {
    let qi = qi_constants(metric, samples, seed)?;
    let fine = PathMetric::new(metric.spec(), 0.5 * metric.epsilon())?;
    let refinement = refinement_report(metric, &fine, refinement_samples, seed)?;
    let change_bound = 2.0 * metric.epsilon();
    let passed = qi.lower_bound_violation <= ROUNDING_TOL
        && refinement.max_increase <= ROUNDING_TOL
        && refinement.max_change <= change_bound;
    Ok(QiSection { qi, refinement, change_bound, passed })
}

/// Sizes for `certify-all`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Quick,
    Default,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyConfig {
    pub profile: Profile,
    pub seed: u64,
    pub epsilon: f64,
    pub visual_samples: usize,
    pub delta_samples: usize,
    pub radius_cap: f64,
    pub boundary_spokes: usize,
    pub boundary_levels: u32,
    pub visual_base: f64,
    pub cover_sectors: usize,
    pub cover_scales: Vec<f64>,
    pub net_scale: f64,
    pub decomposition_d: f64,
    pub decomposition_bound: f64,
    pub budget: u64,
    pub qi_samples: usize,
    pub refinement_samples: usize,
}

impl CertifyConfig {
    pub fn new(profile: Profile, seed: u64) -> Self {
        let base = CertifyConfig {
            profile,
            seed,
            epsilon: 0.1,
            visual_samples: 10_000,
            delta_samples: 100_000,
            radius_cap: 20.0,
            boundary_spokes: 200,
            boundary_levels: 6,
            visual_base: std::f64::consts::E,
            cover_sectors: 3,
            cover_scales: vec![0.5, 1.0, 2.0],
            net_scale: 1.0,
            decomposition_d: 2.0,
            decomposition_bound: 2.0,
            budget: 10_000_000,
            qi_samples: 2_000,
            refinement_samples: 1_000,
        };
        match profile {
            Profile::Default => base,
            Profile::Quick => CertifyConfig {
                epsilon: 0.2,
                visual_samples: 2_000,
                delta_samples: 2_000,
                radius_cap: 10.0,
                boundary_spokes: 60,
                boundary_levels: 4,
                cover_sectors: 2,
                cover_scales: vec![1.0, 2.0],
                budget: 1_000_000,
                qi_samples: 300,
                refinement_samples: 200,
                ..base
            },
        }
    }

    pub fn parameters(&self) -> BTreeMap<String, serde_json::Value> {
        match serde_json::to_value(self) {
            Ok(serde_json::Value::Object(map)) => map.into_iter().collect(),
            _ => BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SectionStatus {
    pub name: String,
    pub passed: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertifySummary {
    pub spec_hash: String,
    pub sections: Vec<SectionStatus>,
    pub passed: bool,
}

fn section<T>(
    sections: &mut Vec<SectionStatus>,
    name: &str,
    run: impl FnOnce() -> Result<T>,
    passed: impl FnOnce(&T) -> bool,
) -> Option<T> {
    let started = std::time::Instant::now();
    let (status, value) = match run() {
        Ok(v) => (SectionStatus { name: name.into(), passed: passed(&v), error: None }, Some(v)),
        Err(e) => (SectionStatus { name: name.into(), passed: false, error: Some(format!("{e:#}")) }, None),
    };
    eprintln!(
        "{name}: {} ({:.1} s)",
        if status.passed { "pass" } else { "FAIL" },
        started.elapsed().as_secs_f64()
    );
    sections.push(status);
    value
}

/// Runs every suite on `spec` and bundles the results. Suite failures are
/// recorded in the summary; only I/O problems abort the run.
pub fn certify_all(spec: &CombSpec, config: &CertifyConfig, bundle: &mut Bundle) -> Result<CertifySummary> {
    let mut sections = Vec::new();
    let seed = config.seed;
    bundle.write("spec.json", spec.to_canonical_json()?.as_bytes())?;
    let metric = PathMetric::new(spec, config.epsilon)?;

    if let Some(r) = section(&mut sections, "visuality", || visual_check(spec, config.visual_samples, seed), |r| r.passed) {
        bundle.write_json("visuality.json", &r)?;
    }
    if let Some(r) = section(
        &mut sections,
        "hyperbolicity",
        || delta_suite(&metric, config.delta_samples, config.radius_cap, seed),
        |r| r.passed,
    ) {
        write_delta(bundle, &r)?;
    }
    if let Some((r, csv)) = section(
        &mut sections,
        "boundary",
        || {
            let params = VisualMetricParams::new(config.visual_base, 1.0, 1.0)?;
            boundary_suite(&metric, config.boundary_spokes, config.boundary_levels, &params)
        },
        |r| r.0.passed,
    ) {
        write_boundary(bundle, &r, &csv)?;
    }
    let cover_spec = CombSpec::build(spec.n_sectors.min(config.cover_sectors), spec.hair_extension)?;
    section(
        &mut sections,
        "covers",
        || {
            let cover_metric = PathMetric::new(&cover_spec, config.epsilon)?;
            bundle.write("cover_spec.json", cover_spec.to_canonical_json()?.as_bytes())?;
            cover_suite(&cover_metric, &config.cover_scales, bundle)
        },
        |r| r.passed,
    );
    if let Some(r) = section(
        &mut sections,
        "lower_bound",
        || {
            lower_bound_suite(
                &metric,
                &lower_bound_region(spec),
                config.net_scale,
                config.decomposition_d,
                config.decomposition_bound,
                config.budget,
            )
        },
        |r| r.passed,
    ) {
        bundle.write_json("lower_bound.json", &r)?;
    }
    if let Some(r) = section(
        &mut sections,
        "quasi_isometry",
        || qi_suite(&metric, config.qi_samples, config.refinement_samples, seed),
        |r| r.passed,
    ) {
        bundle.write_json("qi.json", &r)?;
    }

    let summary =
        CertifySummary { spec_hash: spec.hash(), passed: sections.iter().all(|s| s.passed), sections };
    bundle.write_json("summary.json", &summary)?;
    Ok(summary)
}

/// Parameters shared by the single-suite commands, for the manifest.
pub fn parameters(pairs: &[(&str, serde_json::Value)]) -> BTreeMap<String, serde_json::Value> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

pub fn spec_parameters(spec: &CombSpec) -> Vec<(&'static str, serde_json::Value)> {
    vec![("sectors", json!(spec.n_sectors)), ("hair", json!(spec.hair_extension))]
}
