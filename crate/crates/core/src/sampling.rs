//! Random points of the comb.
//!
//! Pieces are drawn with probability proportional to their measure: hyperbolic
//! area for truncated sectors, length for hairs. Within a sector the radius is
//! drawn by inverting the area profile, so points are uniform in area.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::comb::{CombSpec, LocatedPoint};
use crate::hyperbolic::PolarPoint;

/// Independent generator for work item `index` under a run seed. Results do
/// not depend on how items are scheduled across threads.
pub fn rng_for(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy)]
enum Piece {
    Sector { n: usize, radius: f64 },
    /// Hairs sharing one attachment radius: spokes `first..first + count`.
    Hairs { first: usize, count: usize, from: f64, to: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PieceFilter {
    All,
    SectorsOnly,
    HairsOnly,
}

#[derive(Debug, Clone)]
pub struct CombSampler<'a> {
    spec: &'a CombSpec,
    pieces: Vec<Piece>,
    cumulative: Vec<f64>,
}

impl<'a> CombSampler<'a> {
    /// Sampler over the part of the comb within `radius_cap` of the basepoint.
    pub fn new(spec: &'a CombSpec, radius_cap: f64) -> Self {
        Self::with_filter(spec, radius_cap, PieceFilter::All)
    }

    pub fn with_filter(spec: &'a CombSpec, radius_cap: f64, filter: PieceFilter) -> Self {
        let mut pieces = Vec::new();
        let mut weights = Vec::new();
        let top = spec.r_max.min(radius_cap);
        for s in &spec.sectors {
            if filter != PieceFilter::HairsOnly {
                let radius = s.truncation_radius.min(radius_cap);
                let area = s.alpha * 2.0 * (0.5 * radius).sinh().powi(2);
                pieces.push(Piece::Sector { n: s.index, radius });
                weights.push(area);
            }
            if filter == PieceFilter::SectorsOnly {
                continue;
            }
            // Interior arc vertices all attach at Nₙ; the original rays are
            // listed separately below.
            if s.pieces > 1 && top > s.truncation_radius {
                pieces.push(Piece::Hairs {
                    first: s.first_spoke + 1,
                    count: s.pieces - 1,
                    from: s.truncation_radius,
                    to: top,
                });
                weights.push((s.pieces - 1) as f64 * (top - s.truncation_radius));
            }
        }
        if filter != PieceFilter::SectorsOnly {
            let mut rays: Vec<usize> = vec![0];
            rays.extend(spec.sectors.iter().map(|s| s.first_spoke + s.pieces));
            for id in rays {
                let ray = spec.spoke(id).expect("ray id in range");
                if top > ray.attach_radius {
                    pieces.push(Piece::Hairs { first: id, count: 1, from: ray.attach_radius, to: top });
                    weights.push(top - ray.attach_radius);
                }
            }
        }
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        CombSampler { spec, pieces, cumulative }
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> LocatedPoint {
        let total = *self.cumulative.last().expect("non-empty sampler");
        let x = rng.gen::<f64>() * total;
        let i = self.cumulative.partition_point(|&c| c <= x).min(self.pieces.len() - 1);
        match self.pieces[i] {
            Piece::Sector { n, radius } => {
                let s = &self.spec.sectors[n - 1];
                let rho = 2.0 * (rng.gen::<f64>().sqrt() * (0.5 * radius).sinh()).asinh();
                let phi = s.theta_lo + rng.gen::<f64>() * s.alpha;
                LocatedPoint::InSector {
                    sector: n,
                    position: PolarPoint::new_unchecked(rho.min(radius), phi.min(s.theta_hi)),
                }
            }
            Piece::Hairs { first, count, from, to } => {
                let spoke = first + rng.gen_range(0..count);
                let t = from + rng.gen::<f64>() * (to - from);
                LocatedPoint::OnSpoke { spoke, t: t.min(to) }
            }
        }
    }
}
