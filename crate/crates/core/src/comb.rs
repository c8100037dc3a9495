//! The comb: truncated sectors between rays at halving angles, plus the
//! geodesic rays ("spokes") through the marked vertices of each outer arc.
//!
//! Sector `n` (1-based) spans the angles between the rays `aₙ` and `aₙ₊₁`,
//! which are `π/2ⁿ` apart, and is cut off at the radius `Nₙ` that contains a
//! ball of radius `n`. Its outer arc `Kₙ` is split into `mₙ` equal pieces whose
//! hyperbolic length lies in `[1/2, 1]`, and every division point carries a
//! spoke that continues to infinity (truncated at `r_max` for computation).
//!
//! The vertex lists are implicit: sector `n` stores its piece count and the
//! angle of one piece, and spokes are addressed by a global id in angular
//! order. Deep constructions have millions of vertices per sector, so nothing
//! proportional to the vertex count is stored.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hyperbolic::{arc_length, dist_to_radial_ray, polar_dist, PolarPoint};

/// Deepest supported construction. Past this depth consecutive vertex angles
/// on the last arc are only a handful of ulps apart.
pub const MAX_SECTORS: usize = 12;

/// Slack for radial membership tests.
pub const RADIAL_TOL: f64 = 1e-9;

/// Slack for angular membership tests.
pub const ANGULAR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorSpec {
    pub index: usize,
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub alpha: f64,
    /// Center of the inscribed ball of radius `index`.
    pub center: PolarPoint,
    pub rho: f64,
    /// `Nₙ`, the truncation radius.
    pub truncation_radius: f64,
    /// Number of equal pieces on the outer arc.
    pub pieces: usize,
    pub piece_angle: f64,
    /// Global id of the spoke through the first arc vertex.
    pub first_spoke: usize,
}

impl SectorSpec {
    fn new(n: usize, first_spoke: usize) -> Result<Self> {
        let center = inner_ball_center(n)?;
        let truncation_radius = center.rho + n as f64;
        let alpha = sector_alpha(n);
        let pieces = pieces_for(truncation_radius, alpha);
        Ok(SectorSpec {
            index: n,
            theta_lo: ray_angle(n),
            theta_hi: ray_angle(n + 1),
            alpha,
            center,
            rho: center.rho,
            truncation_radius,
            pieces,
            piece_angle: alpha / pieces as f64,
            first_spoke,
        })
    }

    /// Angle of arc vertex `k` in `0..=pieces`.
    pub fn vertex_angle(&self, k: usize) -> f64 {
        if k == 0 {
            self.theta_lo
        } else if k >= self.pieces {
            self.theta_hi
        } else {
            self.theta_lo + k as f64 * self.piece_angle
        }
    }

    pub fn vertex_angles(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.pieces).map(move |k| self.vertex_angle(k))
    }

    pub fn arc_length(&self) -> f64 {
        arc_length(self.truncation_radius, self.alpha)
    }

    pub fn piece_length(&self) -> f64 {
        self.arc_length() / self.pieces as f64
    }

    /// Whether a plane point lies in the closed truncated sector.
    pub fn contains_position(&self, p: &PolarPoint) -> bool {
        if p.rho <= RADIAL_TOL {
            return true;
        }
        p.rho <= self.truncation_radius + RADIAL_TOL
            && p.phi >= self.theta_lo - ANGULAR_TOL
            && p.phi <= self.theta_hi + ANGULAR_TOL
    }

    /// Index of the arc vertex angularly closest to `phi`.
    pub fn nearest_vertex(&self, phi: f64) -> usize {
        let k = ((phi - self.theta_lo) / self.piece_angle).round();
        k.clamp(0.0, self.pieces as f64) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpokeOrigin {
    /// One of the rays `aⱼ` bounding the sectors (1-based).
    OriginalRay { ray: usize },
    ArcVertex { sector: usize, vertex: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpokeRay {
    pub id: usize,
    pub angle: f64,
    /// Radius beyond which the spoke is a one-dimensional hair.
    pub attach_radius: f64,
    pub origin: SpokeOrigin,
}

impl SpokeRay {
    pub fn attach_point(&self) -> PolarPoint {
        PolarPoint::new_unchecked(self.attach_radius, self.angle)
    }

    pub fn point_at(&self, t: f64) -> PolarPoint {
        PolarPoint::new_unchecked(t, self.angle)
    }
}

/// A point of the comb, addressed by the piece it lives on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LocatedPoint {
    InSector { sector: usize, position: PolarPoint },
    OnSpoke { spoke: usize, t: f64 },
}

impl LocatedPoint {
    pub const BASEPOINT: LocatedPoint =
        LocatedPoint::InSector { sector: 1, position: PolarPoint::ORIGIN };

    /// Total order used to orient symmetric computations.
    pub(crate) fn order_key(&self) -> (u8, usize, f64, f64) {
        match *self {
            LocatedPoint::InSector { sector, position } => (0, sector, position.rho, position.phi),
            LocatedPoint::OnSpoke { spoke, t } => (1, spoke, t, 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombSpec {
    pub n_sectors: usize,
    pub hair_extension: f64,
    pub sectors: Vec<SectorSpec>,
    pub spoke_count: usize,
    pub r_max: f64,
}

/// Angle of the ray `aₙ`: `π(1 - 2^{1-n})`.
pub fn ray_angle(n: usize) -> f64 {
    PI * (1.0 - 0.5f64.powi(n as i32 - 1))
}

fn sector_alpha(n: usize) -> f64 {
    PI * 0.5f64.powi(n as i32)
}

fn check_depth(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("sector index must be at least 1".into()));
    }
    if n > MAX_SECTORS {
        return Err(Error::DepthLimit { requested: n, max: MAX_SECTORS });
    }
    Ok(())
}

fn pieces_for(radius: f64, alpha: f64) -> usize {
    arc_length(radius, alpha).ceil().max(1.0) as usize
}

/// Center of a ball of radius `n` inscribed in sector `n`: on the bisector, at
/// the radius where the distance to either bounding ray equals `n`.
pub fn inner_ball_center(n: usize) -> Result<PolarPoint> {
    check_depth(n)?;
    let alpha = sector_alpha(n);
    let rho = ((n as f64).sinh() / (0.5 * alpha).sin()).asinh();
    Ok(PolarPoint::new_unchecked(rho, ray_angle(n) + 0.5 * alpha))
}

/// `Nₙ = ρₙ + n`, so the inscribed ball sits inside `B(x₀, Nₙ)`.
pub fn truncation_radius(n: usize) -> Result<f64> {
    Ok(inner_ball_center(n)?.rho + n as f64)
}

/// Vertex angles on the outer arc of sector `n`, both endpoints included.
pub fn subdivide_arc(n: usize) -> Result<Vec<f64>> {
    let sector = SectorSpec::new(n, 0)?;
    assert!(sector.arc_length() >= 0.5, "outer arc shorter than one piece");
    Ok(sector.vertex_angles().collect())
}

impl CombSpec {
    pub fn build(n_sectors: usize, hair_extension: f64) -> Result<Self> {
        check_depth(n_sectors)?;
        if !(hair_extension >= 0.0) || !hair_extension.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "hair extension must be a finite non-negative number, got {hair_extension}"
            )));
        }
        let mut sectors = Vec::with_capacity(n_sectors);
        let mut first_spoke = 0;
        for n in 1..=n_sectors {
            let sector = SectorSpec::new(n, first_spoke)?;
            first_spoke += sector.pieces;
            sectors.push(sector);
        }
        let max_radius = sectors.iter().map(|s| s.truncation_radius).fold(0.0, f64::max);
        Ok(CombSpec {
            n_sectors,
            hair_extension,
            sectors,
            spoke_count: first_spoke + 1,
            r_max: max_radius + hair_extension,
        })
    }

    pub fn sector(&self, n: usize) -> Result<&SectorSpec> {
        n.checked_sub(1).and_then(|i| self.sectors.get(i)).ok_or(Error::UnknownSector(n))
    }

    /// Angular extent of the whole comb, `[0, total_angle]`.
    pub fn total_angle(&self) -> f64 {
        self.sectors.last().map_or(0.0, |s| s.theta_hi)
    }

    /// The sector and vertex index of a spoke. Spokes on a shared ray report
    /// the lower sector, as its last vertex.
    pub fn spoke_vertex(&self, id: usize) -> Result<(usize, usize)> {
        if id >= self.spoke_count {
            return Err(Error::UnknownSpoke(id));
        }
        if id == 0 {
            return Ok((1, 0));
        }
        let i = self.sectors.partition_point(|s| s.first_spoke < id) - 1;
        Ok((i + 1, id - self.sectors[i].first_spoke))
    }

    pub fn spoke(&self, id: usize) -> Result<SpokeRay> {
        let (n, k) = self.spoke_vertex(id)?;
        let sector = &self.sectors[n - 1];
        if k == 0 {
            // Only id 0, the ray a₁.
            return Ok(SpokeRay {
                id,
                angle: sector.theta_lo,
                attach_radius: sector.truncation_radius,
                origin: SpokeOrigin::OriginalRay { ray: 1 },
            });
        }
        if k == sector.pieces {
            // Ray aₙ₊₁: bounded by sector n and, unless n is last, by n + 1.
            let attach = match self.sectors.get(n) {
                Some(next) => next.truncation_radius.max(sector.truncation_radius),
                None => sector.truncation_radius,
            };
            return Ok(SpokeRay {
                id,
                angle: sector.theta_hi,
                attach_radius: attach,
                origin: SpokeOrigin::OriginalRay { ray: n + 1 },
            });
        }
        Ok(SpokeRay {
            id,
            angle: sector.vertex_angle(k),
            attach_radius: sector.truncation_radius,
            origin: SpokeOrigin::ArcVertex { sector: n, vertex: k },
        })
    }

    pub fn spokes(&self) -> impl Iterator<Item = SpokeRay> + '_ {
        (0..self.spoke_count).map(move |id| self.spoke(id).expect("id in range"))
    }

    /// Spoke id of arc vertex `k` of sector `n`.
    pub fn vertex_spoke(&self, n: usize, k: usize) -> Result<usize> {
        let sector = self.sector(n)?;
        if k > sector.pieces {
            return Err(Error::InvalidParameter(format!("sector {n} has no vertex {k}")));
        }
        Ok(sector.first_spoke + k)
    }

    /// Plane image of a located point.
    pub fn position(&self, p: &LocatedPoint) -> Result<PolarPoint> {
        match *p {
            LocatedPoint::InSector { sector, position } => {
                self.sector(sector)?;
                Ok(position)
            }
            LocatedPoint::OnSpoke { spoke, t } => Ok(self.spoke(spoke)?.point_at(t)),
        }
    }

    pub fn contains(&self, p: &LocatedPoint) -> Result<bool> {
        match *p {
            LocatedPoint::InSector { sector, position } => {
                Ok(self.sector(sector)?.contains_position(&position) && position.rho.is_finite())
            }
            LocatedPoint::OnSpoke { spoke, t } => {
                let ray = self.spoke(spoke)?;
                Ok(t >= ray.attach_radius - RADIAL_TOL && t <= self.r_max + RADIAL_TOL)
            }
        }
    }

    pub(crate) fn ensure_contains(&self, p: &LocatedPoint) -> Result<()> {
        if self.contains(p)? {
            Ok(())
        } else {
            Err(Error::NotContained(format!("{p:?}")))
        }
    }

    /// Sectors whose closed truncation contains the plane point, ascending.
    pub fn sectors_containing(&self, p: &PolarPoint) -> Vec<usize> {
        self.sectors.iter().filter(|s| s.contains_position(p)).map(|s| s.index).collect()
    }

    /// Rewrites a point into its canonical representation: sector points use
    /// the lowest sector containing them, and a spoke point sitting exactly at
    /// its attachment becomes a sector point.
    pub fn canonicalize(&self, p: &LocatedPoint) -> Result<LocatedPoint> {
        self.ensure_contains(p)?;
        let position = self.position(p)?;
        if let LocatedPoint::OnSpoke { t, spoke } = *p {
            if t > self.spoke(spoke)?.attach_radius {
                return Ok(*p);
            }
        }
        match self.sectors_containing(&position).first() {
            Some(&sector) => Ok(LocatedPoint::InSector { sector, position }),
            None => Ok(*p),
        }
    }

    /// Nearest spoke ray to `p` in the plane metric, and the distance to it.
    pub fn nearest_spoke(&self, p: &LocatedPoint) -> Result<(usize, f64)> {
        self.ensure_contains(p)?;
        match *p {
            LocatedPoint::OnSpoke { spoke, .. } => Ok((spoke, 0.0)),
            LocatedPoint::InSector { sector, position } => {
                let s = self.sector(sector)?;
                let k = s.nearest_vertex(position.phi);
                // Distance to a ray is monotone in the angular gap, so the
                // angularly nearest vertex wins; check neighbours for rounding.
                let best = [k.saturating_sub(1), k, (k + 1).min(s.pieces)]
                    .into_iter()
                    .map(|k| (s.first_spoke + k, dist_to_radial_ray(&position, s.vertex_angle(k))))
                    .fold((usize::MAX, f64::INFINITY), |acc, c| if c.1 < acc.1 { c } else { acc });
                Ok(best)
            }
        }
    }

    /// Plane distance between the images of two located points.
    pub fn plane_dist(&self, p: &LocatedPoint, q: &LocatedPoint) -> Result<f64> {
        Ok(polar_dist(&self.position(p)?, &self.position(q)?))
    }

    /// Canonical JSON: keys sorted, doubles in shortest round-trip form.
    pub fn to_canonical_json(&self) -> Result<String> {
        canonical_json(self)
    }

    /// Parses a spec document and checks it against a fresh build with the
    /// same parameters.
    pub fn from_json(text: &str) -> Result<Self> {
        let parsed: CombSpec = serde_json::from_str(text)?;
        let fresh = CombSpec::build(parsed.n_sectors, parsed.hair_extension)?;
        if fresh != parsed {
            return Err(Error::SpecMismatch);
        }
        Ok(fresh)
    }

    /// SHA-256 of the canonical JSON, hex encoded.
    pub fn hash(&self) -> String {
        let json = self.to_canonical_json().expect("spec serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

/// Serializes through `serde_json::Value`, whose maps are ordered by key.
pub fn canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = serde_json::to_string_pretty(&v)?;
    out.push('\n');
    Ok(out)
}
