//! Construction and numerical certification of the comb space: a union of
//! truncated hyperbolic sectors with infinitely long spoke rays, carrying its
//! own path metric.

// Negated comparisons are used on purpose to reject NaN parameters.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary;
pub mod comb;
pub mod coverings;
pub mod error;
pub mod hyperbolic;
pub mod hyperbolicity;
pub mod path_metric;
pub mod sampling;

pub use boundary::{BoundaryCover, BoundaryPoint, VisualMetricParams};
pub use comb::{canonical_json, CombSpec, LocatedPoint, SectorSpec, SpokeOrigin, SpokeRay};
pub use coverings::{BlockId, Covering, DecompositionVerdict, Net, Region, Verdict};
pub use error::{Error, Result};
pub use hyperbolic::{DiskPoint, PolarPoint};
pub use hyperbolicity::DeltaEstimate;
pub use path_metric::{PathMetric, PathWitness, PortalGraph, QiReport, RefinementReport};
