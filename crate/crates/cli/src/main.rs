use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use comb_cli::manifest::Bundle;
use comb_cli::suites::{self, parameters, spec_parameters, CertifyConfig, Profile};
use comb_cli::render_svg;
use comb_core::boundary::VisualMetricParams;
use comb_core::{CombSpec, LocatedPoint, PathMetric};
use serde_json::json;

#[derive(Parser)]
#[command(name = "comb", version, about = "Build the comb space and certify its coarse-geometric properties")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SpecArgs {
    /// Number of sectors.
    #[arg(long)]
    sectors: Option<usize>,
    /// Length of each hair beyond its attachment.
    #[arg(long)]
    hair: Option<f64>,
    /// Load a spec file written by `build` instead.
    #[arg(long, conflicts_with_all = ["sectors", "hair"])]
    spec: Option<PathBuf>,
}

impl SpecArgs {
    fn load(&self, sectors: usize, hair: f64) -> Result<CombSpec> {
        match &self.spec {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                Ok(CombSpec::from_json(&text)?)
            }
            None => Ok(CombSpec::build(self.sectors.unwrap_or(sectors), self.hair.unwrap_or(hair))?),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write the canonical JSON of a comb spec.
    Build {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw the comb in the Poincaré disk as SVG.
    Render {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Path distance between two located points given as JSON.
    Dist {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
    },
    /// Four-point hyperbolicity estimate with plateau and plane control.
    Delta {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 20.0)]
        radius_cap: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "out/delta")]
        out: PathBuf,
    },
    /// Distance from random points to the nearest spoke ray.
    VisualCheck {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "out/visual-check")]
        out: PathBuf,
    },
    /// Visual-distance matrix and disjoint covers of boundary points.
    Boundary {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long, default_value_t = 200)]
        spokes: usize,
        #[arg(long, default_value_t = 6)]
        levels: u32,
        #[arg(long, default_value_t = std::f64::consts::E)]
        visual_base: f64,
        #[arg(long, default_value = "out/boundary")]
        out: PathBuf,
    },
    /// Constructive covers with bounded d-multiplicity.
    Cover {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        /// Scales d; repeat the flag for several.
        #[arg(long = "scale-d", default_values_t = [0.5, 1.0, 2.0])]
        scale_d: Vec<f64>,
        #[arg(long, default_value = "out/cover")]
        out: PathBuf,
    },
    /// Net of a ball in one sector and the two-family decomposition search.
    LowerBound {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        /// Net scale.
        #[arg(long, default_value_t = 1.0)]
        net_scale: f64,
        #[arg(long = "scale-d", default_value_t = 2.0)]
        scale_d: f64,
        #[arg(long = "diam-D", default_value_t = 2.0)]
        diam_d: f64,
        #[arg(long, default_value_t = 10_000_000)]
        budget: u64,
        #[arg(long, default_value = "out/lower-bound")]
        out: PathBuf,
    },
    /// Run every suite and bundle the results under one manifest.
    CertifyAll {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, value_enum, default_value_t = Profile::Default)]
        profile: Profile,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value = "out/certify-all")]
        out: PathBuf,
    },
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn status(passed: bool) -> ExitCode {
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Build { spec, out } => {
            let spec = spec.load(5, 10.0)?;
            emit(out.as_ref(), &spec.to_canonical_json()?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Render { spec, out } => {
            let spec = spec.load(4, 2.0)?;
            emit(out.as_ref(), &render_svg(&spec))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Dist { spec, epsilon, from, to } => {
            let spec = spec.load(5, 10.0)?;
            let p: LocatedPoint = serde_json::from_str(&from).context("parsing --from")?;
            let q: LocatedPoint = serde_json::from_str(&to).context("parsing --to")?;
            let metric = PathMetric::new(&spec, epsilon)?;
            let (distance, witness) = metric.graph().dist_x(&spec, &p, &q)?;
            let report = json!({
                "from": p,
                "to": q,
                "epsilon": epsilon,
                "distance": distance,
                "plane_distance": spec.plane_dist(&p, &q)?,
                "witness": witness,
            });
            print!("{}", comb_core::canonical_json(&report)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Delta { spec, epsilon, samples, radius_cap, seed, out } => {
            let spec = spec.load(5, 10.0)?;
            let metric = PathMetric::new(&spec, epsilon)?;
            let report = suites::delta_suite(&metric, samples, radius_cap, seed)?;
            let mut bundle = Bundle::create(&out)?;
            suites::write_delta(&mut bundle, &report)?;
            let mut params = spec_parameters(&spec);
            params.extend([("epsilon", json!(epsilon)), ("samples", json!(samples)), ("radius_cap", json!(radius_cap))]);
            bundle.finish("delta", parameters(&params), seed, spec.hash(), report.passed)?;
            println!(
                "delta_max {:.6} (cap {radius_cap}), {:.6} (cap {}), plane {:.6}",
                report.full_cap.delta_max,
                report.half_cap.delta_max,
                0.5 * radius_cap,
                report.plane.delta_max
            );
            Ok(status(report.passed))
        }
        Command::VisualCheck { spec, samples, seed, out } => {
            let spec = spec.load(5, 10.0)?;
            let report = suites::visual_check(&spec, samples, seed)?;
            let mut bundle = Bundle::create(&out)?;
            bundle.write_json("visuality.json", &report)?;
            let mut params = spec_parameters(&spec);
            params.push(("samples", json!(samples)));
            bundle.finish("visual-check", parameters(&params), seed, spec.hash(), report.passed)?;
            println!("max nearest-spoke distance {:.9} (bound {})", report.max_distance, report.bound);
            Ok(status(report.passed))
        }
        Command::Boundary { spec, epsilon, spokes, levels, visual_base, out } => {
            let spec = spec.load(5, 10.0)?;
            let metric = PathMetric::new(&spec, epsilon)?;
            let params = VisualMetricParams::new(visual_base, 1.0, 1.0)?;
            let (report, csv) = suites::boundary_suite(&metric, spokes, levels, &params)?;
            let mut bundle = Bundle::create(&out)?;
            suites::write_boundary(&mut bundle, &report, &csv)?;
            let mut p = spec_parameters(&spec);
            p.extend([
                ("epsilon", json!(epsilon)),
                ("spokes", json!(spokes)),
                ("levels", json!(levels)),
                ("visual_base", json!(visual_base)),
            ]);
            bundle.finish("boundary", parameters(&p), 0, spec.hash(), report.passed)?;
            for l in &report.levels {
                println!("eps_mesh {:<10} clusters {:?} {}", l.eps_mesh, l.cluster_count, if l.passed { "pass" } else { "FAIL" });
            }
            Ok(status(report.passed))
        }
        Command::Cover { spec, epsilon, scale_d, out } => {
            let spec = spec.load(3, 10.0)?;
            let metric = PathMetric::new(&spec, epsilon)?;
            let mut bundle = Bundle::create(&out)?;
            let report = suites::cover_suite(&metric, &scale_d, &mut bundle)?;
            let mut p = spec_parameters(&spec);
            p.extend([("epsilon", json!(epsilon)), ("scale_d", json!(scale_d))]);
            bundle.finish("cover", parameters(&p), 0, spec.hash(), report.passed)?;
            for c in &report.covers {
                println!("d {:<4} multiplicity {} mesh {:.4} blocks {}", c.d, c.multiplicity.multiplicity, c.mesh, c.block_count);
            }
            Ok(status(report.passed))
        }
        Command::LowerBound { spec, epsilon, net_scale, scale_d, diam_d, budget, out } => {
            let spec = spec.load(5, 10.0)?;
            let metric = PathMetric::new(&spec, epsilon)?;
            let region = suites::lower_bound_region(&spec);
            let report = suites::lower_bound_suite(&metric, &region, net_scale, scale_d, diam_d, budget)?;
            let mut bundle = Bundle::create(&out)?;
            bundle.write_json("lower_bound.json", &report)?;
            let mut p = spec_parameters(&spec);
            p.extend([
                ("epsilon", json!(epsilon)),
                ("net_scale", json!(net_scale)),
                ("d", json!(scale_d)),
                ("D", json!(diam_d)),
                ("budget", json!(budget)),
            ]);
            bundle.finish("lower-bound", parameters(&p), 0, spec.hash(), report.passed)?;
            println!(
                "{} net points, verdict {}",
                report.net_points.len(),
                serde_json::to_value(&report.decomposition.verdict)?["verdict"]
            );
            Ok(status(report.passed))
        }
        Command::CertifyAll { spec, profile, seed, epsilon, budget, samples, out } => {
            let spec = spec.load(5, 10.0)?;
            let mut config = CertifyConfig::new(profile, seed);
            if let Some(e) = epsilon {
                config.epsilon = e;
            }
            if let Some(b) = budget {
                config.budget = b;
            }
            if let Some(s) = samples {
                config.delta_samples = s;
            }
            let mut bundle = Bundle::create(&out)?;
            let summary = suites::certify_all(&spec, &config, &mut bundle)?;
            let mut p = config.parameters();
            p.extend(parameters(&spec_parameters(&spec)));
            bundle.finish("certify-all", p, seed, spec.hash(), summary.passed)?;
            for s in &summary.sections {
                println!("{:<16} {}", s.name, if s.passed { "pass" } else { "FAIL" });
            }
            Ok(status(summary.passed))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
