use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{ensure, Context, Result};
use nrsfm_core::baselines::{cluster_then_reconstruct, reconstruct_then_cluster};
use nrsfm_core::cluster::{build_affinity, estimate_num_clusters, spectral_cluster, AffinitySource};
use nrsfm_core::datagen::{generate, SceneSpec};
use nrsfm_core::experiments::{sweep, SweepParam};
use nrsfm_core::metrics::evaluate;
use nrsfm_core::{solve, EvalReport, Matrix, Scene, SolveResult, SolverConfig};
use serde::Serialize;

use crate::bundle::{fmt_f64, read_json, write_json, write_labels, write_matrix, write_residuals, Bundle};
use crate::svg;

/// Largest cluster count tried when `--k` is omitted.
pub const K_MAX: usize = 10;

#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    pub config: Option<PathBuf>,
    pub k: Option<usize>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub max_iters: Option<usize>,
    pub quiet: bool,
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    converged: bool,
    iterations: usize,
    k: usize,
    k_estimated: bool,
    seed: u64,
    pinv_fallback: bool,
    config: &'a SolverConfig,
    report: Option<&'a EvalReport>,
}

pub fn generate_bundle(spec_path: &Path, out: &Path) -> Result<Bundle> {
    let spec: SceneSpec = read_json(spec_path)?;
    let (scene, input) = generate(&spec).with_context(|| format!("generating from {}", spec_path.display()))?;
    let bundle = Bundle::from_generated(scene, &input, spec.seed);
    bundle.write(out)?;
    Ok(bundle)
}

pub fn load_config(path: Option<&Path>, bundle: &Bundle, max_iters: Option<usize>) -> Result<SolverConfig> {
    let mut config = match path {
        Some(p) => read_json(p)?,
        None => SolverConfig::for_size(bundle.manifest.frames, bundle.manifest.points),
    };
    if let Some(n) = max_iters {
        config.max_iters = n;
    }
    config.validate().context("solver configuration")?;
    Ok(config)
}

fn out_dir(bundle_dir: &Path, out: &Option<PathBuf>, name: &str) -> Result<PathBuf> {
    let dir = out.clone().unwrap_or_else(|| bundle_dir.join(name));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn report_for(scene: Option<&Scene>, s: &Matrix, labels: &[usize], k: usize) -> Result<Option<EvalReport>> {
    let Some(scene) = scene else { return Ok(None) };
    let k_eval = k.max(scene.num_objects);
    Ok(Some(evaluate(s.as_ref(), scene.shapes_gt.as_ref(), labels, &scene.labels_gt, k_eval)?))
}

pub struct SolveOutcome {
    pub result: SolveResult,
    pub labels: Vec<usize>,
    pub k: usize,
    pub report: Option<EvalReport>,
}

pub fn solve_bundle(bundle_dir: &Path, opts: &SolveOptions) -> Result<SolveOutcome> {
    let bundle = Bundle::read(bundle_dir)?;
    let config = load_config(opts.config.as_deref(), &bundle, opts.max_iters)?;
    let input = bundle.input()?;
    let result = solve(&input, &config)?;
    let affinity = build_affinity(result.c1.as_ref(), AffinitySource::Trajectory)?;
    let (k, k_estimated) = match opts.k {
        Some(k) => (k, false),
        None => (estimate_num_clusters(&affinity, K_MAX.min(input.points()))?, true),
    };
    let seg = spectral_cluster(&affinity, k, opts.seed)?;
    let report = report_for(bundle.scene.as_ref(), &result.s, &seg.labels, k)?;

    let dir = out_dir(bundle_dir, &opts.out, "result")?;
    write_matrix(&dir.join("S_est.csv"), &result.s)?;
    write_matrix(&dir.join("C1.csv"), &result.c1)?;
    write_matrix(&dir.join("C2.csv"), &result.c2)?;
    write_labels(&dir.join("labels_est.csv"), &seg.labels)?;
    write_residuals(&dir.join("residuals.csv"), &result.residual_history)?;
    fs::write(dir.join("residuals.svg"), svg::residual_plot(&result.residual_history, config.epsilon))?;
    fs::write(dir.join("affinity.svg"), svg::heatmap(&affinity.a, &svg::label_order(&seg.labels)))?;
    let summary = Summary {
        converged: result.converged,
        iterations: result.iterations,
        k,
        k_estimated,
        seed: opts.seed,
        pinv_fallback: result.pinv_fallback,
        config: &config,
        report: report.as_ref(),
    };
    write_json(&dir.join("summary.json"), &summary)?;
    if !opts.quiet {
        let status = if result.converged { "converged" } else { "stopped at the iteration cap" };
        let mut line = format!("{status} after {} iterations; K = {k}", result.iterations);
        if let Some(r) = &report {
            line.push_str(&format!("; eMS {:.4}; e3d {:.4}", r.ems, r.e3d));
        }
        println!("{line}");
        if !seg.isolated.is_empty() {
            eprintln!("warning: {} trajectories have zero affinity", seg.isolated.len());
        }
    }
    Ok(SolveOutcome {
        result,
        labels: seg.labels,
        k,
        report,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum BaselineMode {
    /// Reconstruct all tracks as one body, then cluster the 3D trajectories.
    R2c,
    /// Cluster the 2D tracks, then reconstruct each cluster.
    C2r,
}

pub fn baseline_bundle(bundle_dir: &Path, mode: BaselineMode, opts: &SolveOptions) -> Result<Option<EvalReport>> {
    let bundle = Bundle::read(bundle_dir)?;
    let config = load_config(opts.config.as_deref(), &bundle, opts.max_iters)?;
    let input = bundle.input()?;
    let k = match (opts.k, bundle.manifest.k) {
        (Some(k), _) | (None, Some(k)) => k,
        (None, None) => anyhow::bail!("--k is required when the bundle does not record K"),
    };
    let (s, labels) = match mode {
        BaselineMode::R2c => {
            let (recon, seg) = reconstruct_then_cluster(&input, &config, k, opts.seed)?;
            (recon.s, seg.labels)
        }
        BaselineMode::C2r => {
            let out = cluster_then_reconstruct(&input, &config, k, opts.seed)?;
            (out.s, out.segmentation.labels)
        }
    };
    let report = report_for(bundle.scene.as_ref(), &s, &labels, k)?;
    let name = match mode {
        BaselineMode::R2c => "baseline_r2c",
        BaselineMode::C2r => "baseline_c2r",
    };
    let dir = out_dir(bundle_dir, &opts.out, name)?;
    write_matrix(&dir.join("S_est.csv"), &s)?;
    write_labels(&dir.join("labels_est.csv"), &labels)?;
    if let Some(r) = &report {
        write_json(&dir.join("report.json"), r)?;
    }
    if !opts.quiet {
        match &report {
            Some(r) => println!("{name}: K = {k}; eMS {:.4}; e3d {:.4}", r.ems, r.e3d),
            None => println!("{name}: K = {k}"),
        }
    }
    Ok(report)
}

pub const SWEEP_HEADER: [&str; 6] = ["value", "sparsity", "iterations", "converged", "e3d", "ems"];

pub fn sweep_bundle(bundle_dir: &Path, param: SweepParam, values: &[f64], opts: &SolveOptions) -> Result<String> {
    ensure!(!values.is_empty(), "--values needs at least one value");
    let bundle = Bundle::read(bundle_dir)?;
    let config = load_config(opts.config.as_deref(), &bundle, opts.max_iters)?;
    let input = bundle.input()?;
    let k = opts.k.or(bundle.manifest.k).unwrap_or(1);
    let points = sweep(&input, bundle.scene.as_ref(), &config, param, values, k, opts.seed)?;
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(SWEEP_HEADER)?;
    for p in &points {
        let (e3d, ems) = match &p.report {
            Some(r) => (fmt_f64(r.e3d), fmt_f64(r.ems)),
            None => (String::new(), String::new()),
        };
        wtr.write_record([
            fmt_f64(p.value),
            fmt_f64(p.sparsity),
            p.iterations.to_string(),
            p.converged.to_string(),
            e3d,
            ems,
        ])?;
    }
    let text = String::from_utf8(wtr.into_inner()?)?;
    match &opts.out {
        Some(path) => fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?,
        None if !opts.quiet => print!("{text}"),
        None => {}
    }
    Ok(text)
}
