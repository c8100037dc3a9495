//! Construction checks against routes that share no code with the builder:
//! disk-coordinate distances, bisection and ternary search, and chord
//! polylines.

use std::f64::consts::PI;

use comb_core::comb::{inner_ball_center, ray_angle, truncation_radius, CombSpec, MAX_SECTORS};
use comb_core::Error;

/// Hyperbolic distance from Euclidean disk coordinates.
fn disk_dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    let d2 = (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2);
    let na = 1.0 - a.0 * a.0 - a.1 * a.1;
    let nb = 1.0 - b.0 * b.0 - b.1 * b.1;
    (1.0 + 2.0 * d2 / (na * nb)).acosh()
}

fn to_disk(rho: f64, phi: f64) -> (f64, f64) {
    let r = (0.5 * rho).tanh();
    (r * phi.cos(), r * phi.sin())
}

/// Distance from a point to the ray at angle `theta` by ternary search over
/// the ray parameter.
fn ray_distance(p: (f64, f64), theta: f64) -> f64 {
    let f = |t: f64| disk_dist(p, to_disk(t, theta));
    let (mut lo, mut hi) = (0.0, 40.0);
    for _ in 0..200 {
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

/// Radius on the bisector of sector `n` at which the distance to the
/// bounding ray is `n`, by bisection.
fn center_radius_by_bisection(n: usize) -> f64 {
    let theta = PI * (1.0 - 2f64.powi(1 - n as i32));
    let half = PI / 2f64.powi(n as i32 + 1);
    let (mut lo, mut hi) = (0.0, 20.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ray_distance(to_disk(mid, theta + half), theta) < n as f64 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn centers_match_bisection() {
    for n in 1..=4 {
        let rho = center_radius_by_bisection(n);
        let c = inner_ball_center(n).unwrap();
        assert!((c.rho - rho).abs() < 1e-7, "n={n}: {} vs {rho}", c.rho);
        assert!((truncation_radius(n).unwrap() - (rho + n as f64)).abs() < 1e-7);
    }
}

#[test]
fn ray_angles() {
    for n in 1..=MAX_SECTORS {
        let expected = PI * (1.0 - 2f64.powi(1 - n as i32));
        assert!((ray_angle(n) - expected).abs() <= 1e-12);
    }
    assert_eq!(ray_angle(1), 0.0);
    assert!((ray_angle(2) - PI / 2.0).abs() < 1e-15);
}

/// Length of the arc of radius `r` over `alpha` from chord polylines, with
/// one Richardson step to cancel the leading chord error.
fn polyline_arc(r: f64, theta: f64, alpha: f64, pieces: usize) -> f64 {
    (4.0 * chords(r, theta, alpha, 2 * pieces) - chords(r, theta, alpha, pieces)) / 3.0
}

fn chords(r: f64, theta: f64, alpha: f64, pieces: usize) -> f64 {
    (0..pieces)
        .map(|i| {
            let a = theta + alpha * i as f64 / pieces as f64;
            let b = theta + alpha * (i + 1) as f64 / pieces as f64;
            disk_dist(to_disk(r, a), to_disk(r, b))
        })
        .sum()
}

#[test]
fn arc_pieces_match_polyline_oracle() {
    let spec = CombSpec::build(3, 0.0).unwrap();
    for s in &spec.sectors {
        let total = polyline_arc(s.truncation_radius, s.theta_lo, s.alpha, 10_000);
        assert!((s.arc_length() - total).abs() / total < 1e-6, "sector {}", s.index);
        let first = polyline_arc(s.truncation_radius, s.theta_lo, s.piece_angle, 10_000);
        assert!((s.piece_length() - first).abs() < 1e-6, "{} vs {first}", s.piece_length());
        assert_eq!(s.pieces as f64, total.ceil());
    }
}

#[test]
fn piece_counts_and_lengths() {
    let expected = [8usize, 56, 406, 2985, 22035];
    let spec = CombSpec::build(8, 1.0).unwrap();
    for (s, &m) in spec.sectors.iter().zip(&expected) {
        assert_eq!(s.pieces, m);
    }
    for s in &spec.sectors {
        let len = s.piece_length();
        assert!((0.5..=1.0).contains(&len), "sector {}: {len}", s.index);
    }
    let total: usize = spec.sectors.iter().map(|s| s.pieces).sum();
    assert_eq!(spec.spoke_count, total + 1);
}

#[test]
fn inscribed_balls_clear_both_rays() {
    for n in 1..=8 {
        let c = inner_ball_center(n).unwrap();
        let p = to_disk(c.rho, c.phi);
        for theta in [ray_angle(n), ray_angle(n + 1)] {
            assert!(ray_distance(p, theta) >= n as f64 - 1e-7, "n={n}");
        }
    }
}

#[test]
fn depth_guard() {
    assert!(matches!(CombSpec::build(30, 1.0), Err(Error::DepthLimit { .. })));
    assert!(matches!(CombSpec::build(0, 1.0), Err(Error::InvalidParameter(_))));
    assert!(CombSpec::build(MAX_SECTORS, 0.0).is_ok());
}

#[test]
fn spokes_are_ordered_and_attached_on_arcs() {
    let spec = CombSpec::build(3, 2.0).unwrap();
    let spokes: Vec<_> = spec.spokes().collect();
    assert_eq!(spokes.len(), spec.spoke_count);
    assert!(spokes.windows(2).all(|w| w[0].angle < w[1].angle));
    for (i, s) in spokes.iter().enumerate() {
        assert_eq!(s.id, i);
        let n = spec.sectors.iter().find(|x| s.angle >= x.theta_lo && s.angle <= x.theta_hi).unwrap();
        assert!(s.attach_radius >= n.truncation_radius - 1e-12);
    }
    assert_eq!(spokes[0].attach_radius, spec.sectors[0].truncation_radius);
    assert_eq!(spokes.last().unwrap().angle, ray_angle(4));
}
