//! Library side of the `comb` command-line tool: SVG rendering, certificate
//! suites and reproducible output bundles.

pub mod manifest;
pub mod render;
pub mod suites;

pub use manifest::{Bundle, OutputRecord, RunManifest};
pub use render::render_svg;
pub use suites::{certify_all, CertifyConfig, Profile};
