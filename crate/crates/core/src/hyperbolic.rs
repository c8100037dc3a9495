//! Hyperbolic plane primitives in the Poincaré disk model.
//!
//! Points come in two flavours. [`DiskPoint`] is the Euclidean position in the
//! open unit disk; [`PolarPoint`] stores the hyperbolic distance to the origin
//! together with an angle. Everything the comb construction does happens in
//! polar form, where distances stay accurate far beyond the radius at which
//! disk coordinates saturate in double precision.

use std::f64::consts::{LN_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Raw Euclidean coordinates closer than this to the unit circle are rejected.
pub const BOUNDARY_MARGIN: f64 = 1e-12;

/// Above this radius distances are evaluated in log space.
const LOG_FORM_RADIUS: f64 = 25.0;

/// Tolerance below which a negative Gromov product is treated as rounding.
const PRODUCT_SLACK: f64 = 1e-9;

/// A point of the open unit disk.
///
/// `one_minus_norm2` caches `1 - u² - v²`. Points created from polar
/// coordinates carry it in closed form, which keeps distances accurate even
/// when `u² + v²` itself has rounded to within a few ulps of one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskPoint {
    u: f64,
    v: f64,
    one_minus_norm2: f64,
}

impl DiskPoint {
    pub const ORIGIN: DiskPoint = DiskPoint { u: 0.0, v: 0.0, one_minus_norm2: 1.0 };

    pub fn new(u: f64, v: f64) -> Result<Self> {
        let r = u.hypot(v);
        if !r.is_finite() || r > 1.0 - BOUNDARY_MARGIN {
            return Err(Error::InvalidPoint { u, v });
        }
        Ok(DiskPoint { u, v, one_minus_norm2: (1.0 - r) * (1.0 + r) })
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    pub fn norm(&self) -> f64 {
        self.u.hypot(self.v)
    }

    fn to_hyperboloid(self) -> Hyperboloid {
        let c = self.one_minus_norm2;
        Hyperboloid { t: (2.0 - c) / c, x: 2.0 * self.u / c, y: 2.0 * self.v / c }
    }

    pub fn to_polar(self) -> PolarPoint {
        let r = self.norm();
        // 2·artanh(r) = 2·asinh(r / sqrt(1 - r²))
        let rho = 2.0 * (r / self.one_minus_norm2.sqrt()).asinh();
        PolarPoint::new_unchecked(rho, normalize_angle(self.v.atan2(self.u)))
    }
}

/// A point given by its hyperbolic distance `rho` to the origin and an angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarPoint {
    pub rho: f64,
    pub phi: f64,
}

impl PolarPoint {
    pub const ORIGIN: PolarPoint = PolarPoint { rho: 0.0, phi: 0.0 };

    /// Validates `rho` and normalizes `phi` into `[0, 2π)`.
    pub fn new(rho: f64, phi: f64) -> Result<Self> {
        if !(rho >= 0.0) || !rho.is_finite() || !phi.is_finite() {
            return Err(Error::InvalidPolar { rho, phi });
        }
        Ok(PolarPoint { rho, phi: normalize_angle(phi) })
    }

    /// Skips normalization; used for construction-time angles that are already
    /// known to lie in range.
    pub(crate) fn new_unchecked(rho: f64, phi: f64) -> Self {
        PolarPoint { rho, phi }
    }

    pub fn to_disk(self) -> DiskPoint {
        polar_to_disk(self)
    }

    fn to_hyperboloid(self) -> Hyperboloid {
        let (s, c) = self.phi.sin_cos();
        let sh = self.rho.sinh();
        Hyperboloid { t: self.rho.cosh(), x: sh * c, y: sh * s }
    }

    /// The point reached by walking `distance` from `self` along the geodesic
    /// leaving at `bearing`, where bearing 0 points radially away from the
    /// origin and bearing π/2 points towards increasing angle.
    pub fn offset(self, distance: f64, bearing: f64) -> PolarPoint {
        if distance == 0.0 {
            return self;
        }
        let (sp, cp) = self.phi.sin_cos();
        let (ch, sh) = (self.rho.cosh(), self.rho.sinh());
        // Unit tangents at self: radial and angular.
        let radial = Hyperboloid { t: sh, x: ch * cp, y: ch * sp };
        let angular = Hyperboloid { t: 0.0, x: -sp, y: cp };
        let (sb, cb) = bearing.sin_cos();
        let tangent = radial.scale(cb).add(angular.scale(sb));
        let here = self.to_hyperboloid();
        here.scale(distance.cosh()).add(tangent.scale(distance.sinh())).to_polar()
    }
}

/// Hyperboloid model coordinates, `t² - x² - y² = 1`.
#[derive(Debug, Clone, Copy)]
struct Hyperboloid {
    t: f64,
    x: f64,
    y: f64,
}

impl Hyperboloid {
    fn scale(self, k: f64) -> Self {
        Hyperboloid { t: self.t * k, x: self.x * k, y: self.y * k }
    }

    fn add(self, o: Self) -> Self {
        Hyperboloid { t: self.t + o.t, x: self.x + o.x, y: self.y + o.y }
    }

    fn to_polar(self) -> PolarPoint {
        let r = self.x.hypot(self.y);
        let phi = if r == 0.0 { 0.0 } else { normalize_angle(self.y.atan2(self.x)) };
        PolarPoint::new_unchecked(r.asinh(), phi)
    }

    fn to_disk(self) -> DiskPoint {
        let denom = 1.0 + self.t;
        DiskPoint { u: self.x / denom, v: self.y / denom, one_minus_norm2: 2.0 / denom }
    }
}

/// Folds an angle into `[0, 2π)`.
pub fn normalize_angle(phi: f64) -> f64 {
    let r = phi.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Absolute angular separation folded into `[0, π]`.
pub fn angle_between(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > PI {
        TAU - d
    } else {
        d
    }
}

/// Hyperbolic distance between two disk points.
pub fn dist(p: &DiskPoint, q: &DiskPoint) -> f64 {
    let du = p.u - q.u;
    let dv = p.v - q.v;
    let x = 2.0 * (du * du + dv * dv) / (p.one_minus_norm2 * q.one_minus_norm2);
    // arcosh(1 + x) without cancellation near x = 0.
    (x + (x * (x + 2.0)).sqrt()).ln_1p()
}

/// Hyperbolic distance between two points in polar form.
///
/// Uses `sinh²(d/2) = sinh²(Δρ/2) + sinh ρ₁ sinh ρ₂ sin²(Δφ/2)`, which has no
/// cancellation for nearby points, and switches to log space for large radii.
pub fn polar_dist(p: &PolarPoint, q: &PolarPoint) -> f64 {
    let half_dr = 0.5 * (p.rho - q.rho).abs();
    let half_dphi = 0.5 * angle_between(p.phi, q.phi);
    let s = half_dphi.sin();
    if p.rho.max(q.rho) <= LOG_FORM_RADIUS {
        let a = half_dr.sinh();
        let b = p.rho.sinh() * q.rho.sinh() * s * s;
        return 2.0 * (a * a + b).sqrt().asinh();
    }
    let ln_a = if half_dr > 0.0 { 2.0 * ln_sinh(half_dr) } else { f64::NEG_INFINITY };
    let ln_b = if s > 0.0 && p.rho > 0.0 && q.rho > 0.0 {
        ln_sinh(p.rho) + ln_sinh(q.rho) + 2.0 * s.ln()
    } else {
        f64::NEG_INFINITY
    };
    let hi = ln_a.max(ln_b);
    if hi == f64::NEG_INFINITY {
        return 0.0;
    }
    let lo = ln_a.min(ln_b);
    let ln_sum = hi + (lo - hi).exp().ln_1p();
    2.0 * asinh_of_exp(0.5 * ln_sum)
}

fn ln_sinh(r: f64) -> f64 {
    if r > 1.0 {
        r - LN_2 + (-(-2.0 * r).exp()).ln_1p()
    } else {
        r.sinh().ln()
    }
}

/// `asinh(exp(l))` without overflow.
fn asinh_of_exp(l: f64) -> f64 {
    if l > 20.0 {
        l + LN_2 + 0.25 * (-2.0 * l).exp()
    } else {
        l.exp().asinh()
    }
}

pub fn polar_to_disk(p: PolarPoint) -> DiskPoint {
    let half = 0.5 * p.rho;
    let r = half.tanh();
    let sech = 1.0 / half.cosh();
    let (s, c) = p.phi.sin_cos();
    DiskPoint { u: r * c, v: r * s, one_minus_norm2: sech * sech }
}

pub fn disk_to_polar(p: DiskPoint) -> PolarPoint {
    p.to_polar()
}

/// Distance from `p` to the geodesic ray leaving the origin at `ray_angle`.
pub fn dist_to_radial_ray(p: &PolarPoint, ray_angle: f64) -> f64 {
    let dphi = angle_between(p.phi, ray_angle);
    if dphi <= 0.5 * PI {
        (p.rho.sinh() * dphi.sin()).asinh()
    } else {
        p.rho
    }
}

/// Hyperbolic length of a circular arc of angular width `alpha` on the circle
/// of hyperbolic radius `radius` about the origin.
pub fn arc_length(radius: f64, alpha: f64) -> f64 {
    alpha * radius.sinh()
}

/// The Gromov product `(x|y)_w` under an arbitrary metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GromovProduct<P> {
    pub value: f64,
    pub basepoint: P,
}

pub fn gromov_product<P, F>(x: &P, y: &P, w: &P, metric: F) -> Result<GromovProduct<P>>
where
    P: Clone,
    F: Fn(&P, &P) -> f64,
{
    let value = 0.5 * (metric(x, w) + metric(y, w) - metric(x, y));
    if value < -PRODUCT_SLACK || value.is_nan() {
        return Err(Error::BrokenMetric { value });
    }
    Ok(GromovProduct { value: value.max(0.0), basepoint: w.clone() })
}

/// The point at distance `s` from `p` along the geodesic segment `[p, q]`.
pub fn geodesic_point(p: &DiskPoint, q: &DiskPoint, s: f64) -> Result<DiskPoint> {
    let length = dist(p, q);
    if !(s >= 0.0 && s <= length) {
        return Err(Error::OutOfRange { s, length });
    }
    if length == 0.0 {
        return Ok(*p);
    }
    let hp = p.to_hyperboloid();
    let hq = q.to_hyperboloid();
    let tangent = hq.add(hp.scale(-length.cosh())).scale(1.0 / length.sinh());
    Ok(hp.scale(s.cosh()).add(tangent.scale(s.sinh())).to_disk())
}
