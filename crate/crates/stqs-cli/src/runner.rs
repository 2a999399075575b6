//! Manifest execution: run every grid point, sort rows by grid
//! coordinates, and emit CSV or JSONL with a trailing footer.

use std::io::Write;
use std::time::Instant;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use stqs_core::experiment::{run, ExperimentKind, ScalingMode, SwapBase};

use crate::config::OutputFormat;
use crate::manifest::{GridPoint, RunManifest};

pub const CSV_HEADER: [&str; 17] = [
    "experiment",
    "platform",
    "n_sensors",
    "n_s",
    "n_f",
    "phi_true",
    "epsilon",
    "error_classes",
    "role_scope",
    "shots",
    "backend",
    "post_select",
    "seed",
    "phi_est",
    "accuracy_pct",
    "overlap",
    "kept_fraction",
];

#[derive(Clone, Debug, Serialize)]
pub struct Row {
    pub experiment: String,
    pub platform: String,
    pub n_sensors: usize,
    pub n_s: Option<usize>,
    pub n_f: Option<usize>,
    pub phi_true: f64,
    pub epsilon: f64,
    pub error_classes: String,
    pub role_scope: String,
    pub shots: u64,
    pub backend: String,
    pub post_select: bool,
    pub seed: u64,
    pub phi_est: Option<f64>,
    pub accuracy_pct: Option<f64>,
    pub overlap: Option<f64>,
    pub kept_fraction: f64,
}

fn kind_label(point: &GridPoint) -> String {
    match point.config.kind {
        ExperimentKind::Radar => "radar".into(),
        ExperimentKind::DarkMatter => "dark_matter".into(),
        ExperimentKind::Scaling => match point.config.scaling_mode {
            ScalingMode::Ghz => "scaling_ghz".into(),
            ScalingMode::Unentangled => "scaling_unentangled".into(),
        },
        ExperimentKind::SwapTest => match point.config.swap_base {
            SwapBase::Radar => "swap_radar".into(),
            SwapBase::DarkMatter => "swap_dark_matter".into(),
        },
    }
}

fn backend_label(b: stqs_core::experiment::BackendChoice) -> &'static str {
    match b {
        stqs_core::experiment::BackendChoice::Dense => "dense",
        stqs_core::experiment::BackendChoice::Trajectory => "trajectory",
        stqs_core::experiment::BackendChoice::Auto => "auto",
    }
}

fn run_point(point: &GridPoint) -> Result<Row, String> {
    let result = run(&point.config).map_err(|e| e.to_string())?;
    let is_radar_shape = matches!(
        (point.config.kind, point.config.swap_base),
        (ExperimentKind::Radar, _) | (ExperimentKind::SwapTest, SwapBase::Radar)
    );
    Ok(Row {
        experiment: kind_label(point),
        platform: point.platform_label.clone(),
        n_sensors: point.config.n_sensors(),
        n_s: is_radar_shape.then_some(point.config.n_s),
        n_f: is_radar_shape.then_some(point.config.n_f),
        phi_true: point.config.phi_true(),
        epsilon: point.config.scope.epsilon,
        error_classes: point.classes_label.clone(),
        role_scope: point.roles_label.clone(),
        shots: point.config.shots,
        backend: backend_label(result.meta.backend_used).to_string(),
        post_select: point.config.post_select,
        seed: point.config.seed,
        phi_est: result.phi_est,
        accuracy_pct: result.accuracy_pct,
        overlap: result.overlap,
        kept_fraction: result.kept_fraction,
    })
}

pub struct ExecutionReport {
    pub rows_written: usize,
    pub failures: Vec<(usize, String)>,
    pub exit_code: i32,
}

/// Run the whole grid in parallel and write the output file. Rows are
/// sorted by grid coordinates before writing, so the data rows are
/// byte-identical for a fixed (config, master seed) regardless of the
/// worker count or completion order. Failed points are reported on stderr
/// and yield exit code 2 while the rest of the sweep completes.
pub fn execute(manifest: &RunManifest) -> Result<ExecutionReport> {
    let started = Instant::now();
    let mut grid = manifest.grid();
    grid.sort_by_key(|point| point.coords);

    let run_all = || -> Vec<(usize, Result<Row, String>)> {
        grid.par_iter()
            .enumerate()
            .map(|(i, point)| (i, run_point(point)))
            .collect()
    };
    let mut results = if manifest.jobs > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(manifest.jobs)
            .build()
            .context("cannot build worker pool")?;
        pool.install(run_all)
    } else {
        run_all()
    };
    results.sort_by_key(|(i, _)| *i);

    let mut failures = Vec::new();
    let mut rows = Vec::new();
    for (i, result) in results {
        match result {
            Ok(row) => rows.push(row),
            Err(message) => {
                eprintln!("grid point {i} failed: {message}");
                failures.push((i, message));
            }
        }
    }

    let wall_ms = started.elapsed().as_millis();
    write_rows(manifest, &rows, wall_ms)?;

    let exit_code = if failures.is_empty() { 0 } else { 2 };
    Ok(ExecutionReport {
        rows_written: rows.len(),
        failures,
        exit_code,
    })
}

fn fmt_opt_f64(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

fn fmt_opt_usize(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_rows(manifest: &RunManifest, rows: &[Row], wall_ms: u128) -> Result<()> {
    let path = &manifest.output_path;
    let file = std::fs::File::create(path)
        .with_context(|| format!("cannot create output file {path}"))?;
    let mut out = std::io::BufWriter::new(file);
    let version = env!("CARGO_PKG_VERSION");
    match manifest.format {
        OutputFormat::Csv => {
            writeln!(out, "{}", CSV_HEADER.join(","))?;
            for r in rows {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    r.experiment,
                    r.platform,
                    r.n_sensors,
                    fmt_opt_usize(r.n_s),
                    fmt_opt_usize(r.n_f),
                    r.phi_true,
                    r.epsilon,
                    r.error_classes,
                    r.role_scope,
                    r.shots,
                    r.backend,
                    r.post_select,
                    r.seed,
                    fmt_opt_f64(r.phi_est),
                    fmt_opt_f64(r.accuracy_pct),
                    fmt_opt_f64(r.overlap),
                    r.kept_fraction,
                )?;
            }
            writeln!(
                out,
                "# footer wall_time_ms={wall_ms} version={version} master_seed={} rows={}",
                manifest.master_seed,
                rows.len()
            )?;
        }
        OutputFormat::Jsonl => {
            for r in rows {
                writeln!(out, "{}", serde_json::to_string(r)?)?;
            }
            writeln!(
                out,
                "{}",
                serde_json::json!({
                    "footer": {
                        "wall_time_ms": wall_ms as u64,
                        "version": version,
                        "master_seed": manifest.master_seed,
                        "rows": rows.len(),
                    }
                })
            )?;
        }
    }
    out.flush()?;
    Ok(())
}
