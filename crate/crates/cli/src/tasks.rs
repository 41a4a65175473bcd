//! Task dispatch and report rendering.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use attrbounds::bounds::{critical_dimension_bound, dimension_bound, BoundsReport};
use attrbounds::dynamics::{numeric_dimension_estimate, volume_growth_experiment};
use attrbounds::geometry::{discretize, Geometry, GridDomain};
use attrbounds::spectral::{assemble, lowest_eigenvalues_with, verify_melas, EigenOptions, PotentialKind};
use attrbounds::CSV_SCHEMA;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{ConfigText, ExperimentConfig, Format, Task};
use crate::CliError;

/// A named output file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    fn new(name: &str, contents: String) -> Self {
        Artifact {
            name: name.to_string(),
            contents,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub written: Vec<PathBuf>,
    pub manifest: PathBuf,
}

#[derive(Serialize)]
struct GeometryReport {
    kind: &'static str,
    dim: usize,
    h: f64,
    points: usize,
    volume: f64,
    inertia: f64,
    ratio: f64,
    interior_diameter: f64,
}

fn json<T: Serialize>(v: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(v).map_err(attrbounds::Error::from)?;
    s.push('\n');
    Ok(s)
}

fn domain(cfg: &ExperimentConfig) -> Result<GridDomain, CliError> {
    Ok(discretize(&cfg.domain)?)
}

/// Geometry fed to the bounds.
fn bounds_geometry(cfg: &ExperimentConfig, dom: &GridDomain) -> Result<Geometry, CliError> {
    if cfg.exact_geometry {
        if let Some(g) = cfg.domain.shape.exact_geometry()? {
            return Ok(g);
        }
    }
    Ok(dom.geometry()?)
}

fn is_critical(cfg: &ExperimentConfig) -> bool {
    let p = &cfg.params;
    match p.mu_star() {
        Some(star) => p.delta > 0.0 && (p.mu() - star).abs() <= 1e-12 * star,
        None => false,
    }
}

/// Compute the output files of a task without touching the disk.
pub fn render(cfg: &ExperimentConfig, text: &ConfigText, threads: usize) -> Result<Vec<Artifact>, CliError> {
    let csv = cfg.format == Format::Csv;
    Ok(match cfg.task {
        Task::Geometry => {
            let dom = domain(cfg)?;
            let g = dom.geometry()?;
            let report = GeometryReport {
                kind: cfg.domain.shape.kind_name(),
                dim: dom.dim(),
                h: dom.h(),
                points: dom.len(),
                volume: g.volume,
                inertia: g.inertia,
                ratio: g.ratio,
                interior_diameter: dom.interior_diameter(),
            };
            if csv {
                vec![Artifact::new(
                    "geometry.csv",
                    format!(
                        "{CSV_SCHEMA}\nkind,dim,h,points,volume,inertia,ratio,interior_diameter\n{},{},{},{},{},{},{},{}\n",
                        report.kind,
                        report.dim,
                        report.h,
                        report.points,
                        report.volume,
                        report.inertia,
                        report.ratio,
                        report.interior_diameter
                    ),
                )]
            } else {
                vec![Artifact::new("geometry.json", json(&report)?)]
            }
        }
        Task::Spectrum => {
            let dom = domain(cfg)?;
            let op = assemble(&dom, PotentialKind::new(cfg.params.potential, cfg.params.mu()), 1.0)?;
            let opts = EigenOptions {
                tol: cfg.spectrum.tol,
                seed: cfg.seed,
                method: cfg.spectrum.method,
            };
            let s = lowest_eigenvalues_with(&op, cfg.spectrum.m, &opts)?;
            if csv {
                vec![Artifact::new("spectrum.csv", s.to_csv())]
            } else {
                vec![Artifact::new("spectrum.json", json(&s)?)]
            }
        }
        Task::Verify => {
            let dom = domain(cfg)?;
            let lap = assemble(&dom, PotentialKind::None, 1.0)?;
            let opts = EigenOptions {
                tol: cfg.spectrum.tol,
                seed: cfg.seed,
                method: cfg.spectrum.method,
            };
            let s = lowest_eigenvalues_with(&lap, cfg.verify.m_max, &opts)?;
            let melas = verify_melas(&dom, &s, cfg.verify.m_max, cfg.verify.c, cfg.verify.k)?;
            if csv {
                vec![Artifact::new("verify.csv", melas.to_csv())]
            } else {
                vec![Artifact::new("verify.json", json(&melas)?)]
            }
        }
        Task::Bounds => {
            let dom = domain(cfg)?;
            if is_critical(cfg) {
                let c1 = cfg
                    .params
                    .c1
                    .ok_or_else(|| CliError::Config("critical potential: params.c1 is required".into()))?;
                let b = critical_dimension_bound(&cfg.params, bounds_geometry(cfg, &dom)?.volume, c1)?;
                if csv {
                    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
                    vec![Artifact::new(
                        "bounds.csv",
                        format!(
                            "{CSV_SCHEMA}\nexponent,d0_tilde,d0_tilde_half\n{},{},{}\n",
                            cell(b.exponent),
                            cell(b.d0_tilde),
                            cell(b.d0_tilde_half)
                        ),
                    )]
                } else {
                    vec![Artifact::new("bounds.json", json(&b)?)]
                }
            } else {
                let report = dimension_bound(&cfg.params, &bounds_geometry(cfg, &dom)?)?;
                if csv {
                    vec![Artifact::new("bounds.csv", report.to_csv())]
                } else {
                    vec![Artifact::new("bounds.json", json(&report)?)]
                }
            }
        }
        Task::Simulate => {
            let dom = domain(cfg)?;
            let run = volume_growth_experiment(&cfg.params, &dom, &cfg.simulate)?;
            vec![
                Artifact::new("timeseries.csv", run.time_series_csv()),
                Artifact::new("summary.json", json(&run.summary)?),
            ]
        }
        Task::Lyapunov => {
            let dom = domain(cfg)?;
            let est = numeric_dimension_estimate(
                &cfg.params,
                &dom,
                cfg.lyapunov.m_max,
                &cfg.lyapunov.seeds,
                &cfg.simulate,
            )?;
            let mut table = format!("{CSV_SCHEMA}\nseed,index,exponent,cumulative\n");
            for (seed, exps) in est.seeds.iter().zip(&est.exponents) {
                let mut acc = 0.0;
                for (i, e) in exps.iter().enumerate() {
                    acc += e;
                    table.push_str(&format!("{seed},{},{e:.12e},{acc:.12e}\n", i + 1));
                }
            }
            vec![
                Artifact::new("lyapunov.csv", table),
                Artifact::new("dimension.json", json(&est)?),
            ]
        }
        Task::Sweep => {
            let rows = sweep(cfg, text, threads)?;
            if csv {
                vec![Artifact::new("sweep.csv", sweep_csv(cfg, &rows))]
            } else {
                let list: Vec<_> = rows
                    .iter()
                    .map(|r| {
                        json!({
                            "index": r.index,
                            "values": r.values,
                            "status": if r.report.is_ok() { "ok" } else { "failed" },
                            "report": r.report.as_ref().ok(),
                            "error": r.report.as_ref().err(),
                        })
                    })
                    .collect();
                vec![Artifact::new("sweep.json", json(&list)?)]
            }
        }
    })
}

/// One parameter tuple of a sweep.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub index: usize,
    pub values: Vec<String>,
    pub report: Result<BoundsReport, String>,
}

/// Bounds reports over the Cartesian product of the sweep axes, in tuple
/// order. Failing tuples are kept with their error message.
pub fn sweep(cfg: &ExperimentConfig, text: &ConfigText, threads: usize) -> Result<Vec<SweepRow>, CliError> {
    let mut tuples: Vec<Vec<String>> = vec![Vec::new()];
    for axis in &cfg.axes {
        tuples = tuples
            .into_iter()
            .flat_map(|t| {
                axis.values.iter().map(move |v| {
                    let mut t = t.clone();
                    t.push(v.clone());
                    t
                })
            })
            .collect();
    }
    let one = |index: usize, values: &Vec<String>| -> SweepRow {
        let report = (|| -> Result<BoundsReport, CliError> {
            let mut t = text.clone();
            for (axis, v) in cfg.axes.iter().zip(values) {
                t.set(&axis.key, v.as_str())?;
            }
            let c = ExperimentConfig::from_text(&t)?;
            let dom = discretize(&c.domain)?;
            Ok(dimension_bound(&c.params, &bounds_geometry(&c, &dom)?)?)
        })();
        SweepRow {
            index,
            values: values.clone(),
            report: report.map_err(|e| e.to_string()),
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(|| tuples.par_iter().enumerate().map(|(i, t)| one(i, t)).collect()))
}

fn sweep_csv(cfg: &ExperimentConfig, rows: &[SweepRow]) -> String {
    let mut out = format!("{CSV_SCHEMA}\nindex,");
    for a in &cfg.axes {
        out.push_str(&a.key);
        out.push(',');
    }
    out.push_str("status,");
    out.push_str(BoundsReport::CSV_COLUMNS);
    out.push_str(",error\n");
    let empty = ",".repeat(BoundsReport::CSV_COLUMNS.matches(',').count());
    for r in rows {
        out.push_str(&format!("{},", r.index));
        for v in &r.values {
            out.push_str(v);
            out.push(',');
        }
        match &r.report {
            Ok(b) => out.push_str(&format!("ok,{},\n", b.csv_row())),
            Err(e) => {
                let msg: String = e.chars().map(|c| if c == ',' || c == '\n' { ';' } else { c }).collect();
                out.push_str(&format!("failed,{empty},{msg}\n"));
            }
        }
    }
    out
}

fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    let io = |source, path: &Path| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let path = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io(e, dir))?;
    tmp.write_all(contents.as_bytes()).map_err(|e| io(e, &path))?;
    tmp.persist(&path).map_err(|e| io(e.error, &path))?;
    Ok(path)
}

/// Render the task, write every artifact atomically into the output
/// directory and finish with `manifest.json`.
pub fn run(cfg: &ExperimentConfig, text: &ConfigText, threads: usize) -> Result<RunSummary, CliError> {
    let artifacts = render(cfg, text, threads)?;
    fs::create_dir_all(&cfg.out).map_err(|source| CliError::Io {
        path: cfg.out.clone(),
        source,
    })?;
    let mut written = Vec::new();
    for a in &artifacts {
        written.push(write_atomic(&cfg.out, &a.name, &a.contents)?);
    }
    let seeds: Vec<u64> = match cfg.task {
        Task::Lyapunov => cfg.lyapunov.seeds.clone(),
        _ => vec![cfg.seed],
    };
    let created = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let manifest = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "task": cfg.task.name(),
        "config_sha256": text.hash(),
        "config": text.serialize(),
        "seeds": seeds,
        "threads": threads,
        "outputs": artifacts.iter().map(|a| a.name.as_str()).collect::<Vec<_>>(),
        "created_unix": created,
    });
    let manifest = write_atomic(&cfg.out, "manifest.json", &json(&manifest)?)?;
    Ok(RunSummary { written, manifest })
}
