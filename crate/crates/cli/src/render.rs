//! SVG drawing of a comb in the Poincaré disk, in Euclidean disk
//! coordinates.

use std::fmt::Write;

use comb_core::hyperbolic::{polar_to_disk, PolarPoint};
use comb_core::CombSpec;

const SIZE: f64 = 1000.0;
const CENTER: f64 = SIZE / 2.0;
const RADIUS: f64 = 480.0;

fn screen(p: PolarPoint) -> (f64, f64) {
    let d = polar_to_disk(p);
    (CENTER + RADIUS * d.u(), CENTER - RADIUS * d.v())
}

fn euclidean_radius(rho: f64) -> f64 {
    RADIUS * (0.5 * rho).tanh()
}

/// One `class="sector"` outline and one `class="arc"` per sector, one
/// `class="spoke"` line per spoke drawn from its attachment to the hair
/// cut-off, and the unit circle as `class="disk"`.
pub fn render_svg(spec: &CombSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(out, r#"<circle class="disk" cx="{CENTER}" cy="{CENTER}" r="{RADIUS}" fill="none" stroke="black" stroke-width="1"/>"#);
    let _ = writeln!(out, r#"<g fill="none" stroke-width="0.5">"#);
    for s in &spec.sectors {
        let r = euclidean_radius(s.truncation_radius);
        let (x0, y0) = screen(PolarPoint::new(s.truncation_radius, s.theta_lo).expect("sector corner"));
        let (x1, y1) = screen(PolarPoint::new(s.truncation_radius, s.theta_hi).expect("sector corner"));
        let _ = writeln!(
            out,
            r#"<path class="sector" data-index="{}" d="M {CENTER:.4} {CENTER:.4} L {x0:.4} {y0:.4} A {r:.4} {r:.4} 0 0 0 {x1:.4} {y1:.4} Z" stroke="steelblue"/>"#,
            s.index
        );
        let _ = writeln!(
            out,
            r#"<path class="arc" data-index="{}" d="M {x0:.4} {y0:.4} A {r:.4} {r:.4} 0 0 0 {x1:.4} {y1:.4}" stroke="firebrick"/>"#,
            s.index
        );
    }
    for ray in spec.spokes() {
        let (x0, y0) = screen(ray.attach_point());
        let (x1, y1) = screen(ray.point_at(ray.attach_radius + spec.hair_extension));
        let _ = writeln!(
            out,
            r#"<line class="spoke" data-id="{}" x1="{x0:.4}" y1="{y0:.4}" x2="{x1:.4}" y2="{y1:.4}" stroke="gray"/>"#,
            ray.id
        );
    }
    out.push_str("</g>\n</svg>\n");
    out
}
