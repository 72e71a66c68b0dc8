//! Subcommand bodies. Each writes its outputs plus `config.toml` and
//! `manifest.json` into the output directory.

use std::io::Write;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::json;

use geochaos::bounds::{bounds_table, nn_poly_error, BoundReport};
use geochaos::dataset::{attractor_cloud, export_pool, filtered_indices, sample_pairs, Pairs, PoolSpec};
use geochaos::dynamics::{iterate, DiscreteMap, Trajectory};
use geochaos::ftle::{compare_with_baseline, summarize, truth_baseline, write_scatter_csv, CompareSpec, HorizonResult};
use geochaos::geometry::{
    classify_orthogonal, classify_orthogonal_2d, compression_certificate, hull_occupancy, stretch_count, svd_wstar,
    trace_substeps,
};
use geochaos::plot::{Plot, Series};
use geochaos::training::{rms_error, sweep, train_with_validation, validation_seed, write_sweep_csv, SweepFtle};
use geochaos::Mlp;

use crate::config::{MapKind, RunConfig};
use crate::error::CliError;
use crate::experiments::{
    attractor_start, emulator_cloud, load_model, load_pool, write_json, BoundingBox, TruthMap,
};

/// Seed of the held-out test draw that accompanies a training draw with `seed`.
pub fn test_seed(seed: u64) -> u64 {
    seed ^ 0x7e57_0000_0000_0000
}

/// Singular values at or above this count as stretching directions.
pub const STRETCH_THRESHOLD: f64 = 1.0;

/// Output directory bookkeeping shared by all commands.
pub struct Run<'a> {
    pub cfg: &'a RunConfig,
    pub command: &'static str,
    outputs: Vec<String>,
}

impl<'a> Run<'a> {
    pub fn start(cfg: &'a RunConfig, command: &'static str) -> Result<Self, CliError> {
        std::fs::create_dir_all(&cfg.output.dir)?;
        std::fs::write(cfg.output.dir.join("config.toml"), cfg.to_toml())?;
        Ok(Self {
            cfg,
            command,
            outputs: vec!["config.toml".into()],
        })
    }

    /// Path for an output file, recorded in the manifest.
    pub fn file(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.cfg.output.dir.join(name)
    }

    pub fn finish(mut self, summary: serde_json::Value) -> Result<serde_json::Value, CliError> {
        self.outputs.push("manifest.json".into());
        let manifest = json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "replay": format!("geochaos {} --config config.toml", self.command),
            "seeds": {
                "dataset": self.cfg.dataset.seed,
                "ftle": self.cfg.ftle.seed,
                "bounds": self.cfg.bounds.seed,
                "sweep": self.cfg.sweep.seeds,
            },
            "outputs": self.outputs,
            "summary": summary,
        });
        write_json(&self.cfg.output.dir.join("manifest.json"), &manifest)?;
        Ok(summary)
    }
}

fn model_spec(cfg: &RunConfig) -> Option<&str> {
    cfg.model.path.as_deref()
}

fn require_model(cfg: &RunConfig) -> Result<Mlp, CliError> {
    let spec = model_spec(cfg).ok_or_else(|| CliError::Config("a model is required (--model or model.path)".into()))?;
    let net = load_model(spec)?;
    if net.input_dim() != cfg.dim() || net.output_dim() != cfg.dim() {
        return Err(CliError::Config(format!(
            "model maps {}->{}, the {:?} system is {}-dimensional",
            net.input_dim(),
            net.output_dim(),
            cfg.system.map,
            cfg.dim()
        )));
    }
    Ok(net)
}

fn start_point(cfg: &RunConfig, truth: &TruthMap) -> Result<Vec<f64>, CliError> {
    match &cfg.trajectory.start {
        Some(s) => Ok(s.clone()),
        None => attractor_start(truth, &cfg.pool_spec(), cfg.dataset.seed),
    }
}

pub fn gen_data(cfg: &RunConfig) -> Result<serde_json::Value, CliError> {
    let mut run = Run::start(cfg, "gen-data")?;
    let truth = TruthMap::from_config(cfg);
    let pool = geochaos::dataset::generate_pool(&truth, &cfg.pool_spec(), cfg.dataset.seed)?;
    let path = run.file("pool.csv");
    export_pool(&pool, &path)?;
    run.file("pool.json");
    let filter = cfg.filter()?;
    let kept = filtered_indices(&pool.pairs, &filter).len();
    run.finish(json!({
        "rows": pool.pairs.len(),
        "dim": pool.pairs.dim(),
        "retries": pool.retries,
        "filter": cfg.dataset.filter,
        "filtered_fraction": kept as f64 / pool.pairs.len().max(1) as f64,
    }))
}

#[derive(Debug, Serialize)]
struct TrainSummary {
    n_train: usize,
    n_validation: usize,
    n_test: usize,
    filtered_fraction: f64,
    train_rms: f64,
    test_rms: f64,
    param_count: usize,
    gamma: f64,
    alpha: f64,
    beta: f64,
    epochs_run: usize,
    stop_reason: geochaos::training::StopReason,
    selected_restart: usize,
    restart_scores: Vec<Option<f64>>,
}

pub fn train(cfg: &RunConfig) -> Result<serde_json::Value, CliError> {
    let mut run = Run::start(cfg, "train")?;
    let truth = TruthMap::from_config(cfg);
    let pool = load_pool(cfg, &truth)?;
    let filter = cfg.filter()?;
    let seed = cfg.dataset.seed;
    let data = sample_pairs(&pool.pairs, cfg.dataset.n_train, &filter, seed)?;
    let validation = (cfg.dataset.n_validation > 0)
        .then(|| sample_pairs(&pool.pairs, cfg.dataset.n_validation, &filter, validation_seed(seed)))
        .transpose()?;
    let test = sample_pairs(
        &pool.pairs,
        cfg.dataset.n_test.min(pool.pairs.len()),
        &geochaos::dataset::RegionFilter::none(),
        test_seed(seed),
    )?;
    let (net, report) = train_with_validation(&cfg.arch(), &data, validation.as_ref(), &cfg.train_config())?;
    let net = net.with_map_id(truth.map_id());
    net.save(&run.file("model.json"))?;

    let trace_path = run.file("train_trace.csv");
    let mut f = std::io::BufWriter::new(std::fs::File::create(trace_path)?);
    writeln!(f, "epoch,f_before,f_after,ed,ew,alpha,beta,gamma,mu")?;
    for r in &report.trace {
        writeln!(
            f,
            "{},{},{},{},{},{},{},{},{}",
            r.epoch, r.f_before, r.f_after, r.ed, r.ew, r.alpha, r.beta, r.gamma, r.mu
        )?;
    }
    f.flush()?;

    let kept = filtered_indices(&pool.pairs, &filter).len();
    let summary = TrainSummary {
        n_train: data.len(),
        n_validation: validation.as_ref().map_or(0, Pairs::len),
        n_test: test.len(),
        filtered_fraction: kept as f64 / pool.pairs.len().max(1) as f64,
        train_rms: rms_error(&net, &data),
        test_rms: rms_error(&net, &test),
        param_count: report.param_count,
        gamma: report.gamma,
        alpha: report.alpha,
        beta: report.beta,
        epochs_run: report.trace.len(),
        stop_reason: report.stop_reason,
        selected_restart: report.selected_restart,
        restart_scores: report.restart_scores.clone(),
    };
    write_json(&run.file("train_report.json"), &summary)?;
    run.finish(serde_json::to_value(&summary)?)
}

/// `n + 1` states, truncated at divergence.
fn orbit_or_partial<M: DiscreteMap + ?Sized>(map: &M, start: &[f64], n: usize, guard: f64) -> (Trajectory, Option<usize>) {
    match iterate(map, start, n, guard) {
        Ok(t) => (t, None),
        Err(geochaos::error::DynamicsError::Diverged { step }) => {
            let t = if step == 0 {
                Trajectory::new(start.len())
            } else {
                iterate(map, start, step - 1, guard).unwrap_or_else(|_| Trajectory::new(start.len()))
            };
            (t, Some(step))
        }
        Err(_) => (Trajectory::new(start.len()), Some(0)),
    }
}

pub fn trajectory(cfg: &RunConfig) -> Result<serde_json::Value, CliError> {
    let net = require_model(cfg)?;
    let mut run = Run::start(cfg, "trajectory")?;
    let truth = TruthMap::from_config(cfg);
    let start = start_point(cfg, &truth)?;
    if start.len() != cfg.dim() {
        return Err(CliError::Config(format!("start must have {} coordinates", cfg.dim())));
    }
    let n = cfg.trajectory.n_steps;
    let guard = cfg.dataset.guard;
    let (t_orbit, t_div) = orbit_or_partial(&truth, &start, n, guard);
    let (e_orbit, e_div) = orbit_or_partial(&net, &start, n, guard);

    let names = axis_names(cfg.dim());
    let mut f = std::io::BufWriter::new(std::fs::File::create(run.file("trajectory.csv"))?);
    let header: Vec<String> = names
        .iter()
        .map(|a| format!("{a}_truth"))
        .chain(names.iter().map(|a| format!("{a}_nn")))
        .collect();
    writeln!(f, "step,{}", header.join(","))?;
    let cell = |t: &Trajectory, k: usize, a: usize| if k < t.len() { t.point(k)[a].to_string() } else { String::new() };
    for k in 0..=n {
        let cols: Vec<String> = (0..cfg.dim())
            .map(|a| cell(&t_orbit, k, a))
            .chain((0..cfg.dim()).map(|a| cell(&e_orbit, k, a)))
            .collect();
        writeln!(f, "{k},{}", cols.join(","))?;
    }
    f.flush()?;

    let bbox = BoundingBox::for_map(cfg.system.map);
    let left_box_at = e_orbit.points().position(|p| !bbox.contains(p));
    let (ax, ay) = match cfg.system.map {
        MapKind::L63 => (0, 2),
        MapKind::Henon => (0, 1),
    };
    let proj = |t: &Trajectory| t.points().map(|p| (p[ax], p[ay])).collect::<Vec<_>>();
    let series = |label: &str, color: &str, t: &Trajectory| match cfg.system.map {
        MapKind::L63 => Series::line(label, color, proj(t)),
        MapKind::Henon => Series::dots(label, color, proj(t)),
    };
    Plot::new("truth and emulator orbits", names[ax], names[ay])
        .with(series("truth", "blue", &t_orbit))
        .with(series("emulator", "red", &e_orbit))
        .save(&run.file("trajectory.svg"))?;

    let meta = json!({
        "start": start,
        "n_steps": n,
        "truth_diverged_at": t_div,
        "emulator_diverged_at": e_div,
        "emulator_left_box_at": left_box_at,
        "box": bbox,
    });
    write_json(&run.file("trajectory.json"), &meta)?;
    run.finish(meta)
}

fn axis_names(dim: usize) -> Vec<&'static str> {
    ["x", "y", "z"].into_iter().take(dim).collect()
}

pub fn ftle(cfg: &RunConfig) -> Result<serde_json::Value, CliError> {
    let truth = TruthMap::from_config(cfg);
    // `truth` as the model compares the true map with itself
    let net = match model_spec(cfg) {
        Some("truth") => None,
        _ => Some(require_model(cfg)?),
    };
    let mut run = Run::start(cfg, "ftle")?;
    let pool = load_pool(cfg, &truth)?;
    let truth_cloud = attractor_cloud(&pool.pairs);
    let spec = cfg.compare_spec();
    let baseline = truth_baseline(&truth, &truth_cloud, &spec)?;
    let results = match &net {
        None => compare_with_baseline(&baseline, &truth, &truth_cloud)?,
        Some(net) => {
            let cloud_spec = PoolSpec {
                n_traj: cfg.ftle.emulator_traj,
                ..cfg.pool_spec()
            };
            let cloud = emulator_cloud(net, &cloud_spec, cfg.ftle.seed)?;
            compare_with_baseline(&baseline, net, &cloud)?
        }
    };
    write_scatter_csv(&results, &run.file("ftle_scatter.csv"))?;
    for r in &results {
        ftle_scatter_plot(r).save(&run.file(&format!("ftle_N{}.svg", r.n_steps)))?;
    }
    let summary = summarize(&results);
    write_json(&run.file("ftle_summary.json"), &summary)?;
    run.finish(serde_json::to_value(&summary)?)
}

fn ftle_scatter_plot(r: &HorizonResult) -> Plot {
    let pts = r.pairs.iter().map(|p| (p.truth.lambda_max, p.emulator.lambda_max)).collect();
    let mut p = Plot::new(format!("FTLE at N_t = {} (rms {:.4})", r.n_steps, r.rms), "lambda truth", "lambda emulator")
        .with(Series::dots("pairs", "black", pts));
    p.diagonal = true;
    p
}

pub fn geometry(cfg: &RunConfig) -> Result<serde_json::Value, CliError> {
    let mut cfg = cfg.clone();
    if cfg.model.path.is_none() {
        cfg.model.path = Some(
            match cfg.system.map {
                MapKind::L63 => "bundled:table1",
                MapKind::Henon => "bundled:table2",
            }
            .into(),
        );
    }
    let net = require_model(&cfg)?;
    let mut run = Run::start(&cfg, "geometry")?;
    let svd = svd_wstar(&net)?;
    let s: Vec<f64> = svd.s.iter().copied().collect();
    let mat = |m: &nalgebra::DMatrix<f64>| -> Vec<Vec<f64>> { m.row_iter().map(|r| r.iter().copied().collect()).collect() };
    let vt = svd.v.transpose();
    let mut report = json!({
        "singular_values": s,
        "stretch_count": stretch_count(&svd.s, STRETCH_THRESHOLD),
        "u": mat(&svd.u),
        "vt": mat(&vt),
        "det_u": svd.u.determinant(),
        "det_v": svd.v.determinant(),
        "u_angles": classify_orthogonal(&svd.u)?,
        "vt_angles": classify_orthogonal(&vt)?,
    });
    if svd.u.nrows() == 2 {
        report["u_2d"] = serde_json::to_value(classify_orthogonal_2d(&svd.u)?)?;
        report["vt_2d"] = serde_json::to_value(classify_orthogonal_2d(&vt)?)?;

        // horseshoe substeps on a true-attractor orbit
        let truth = TruthMap::from_config(&cfg);
        let start = start_point(&cfg, &truth)?;
        let orbit = iterate(&truth, &start, 199, cfg.dataset.guard)
            .map_err(|e| CliError::Numerical(e.to_string()))?;
        let points: Vec<Vec<f64>> = orbit.points().map(<[f64]>::to_vec).collect();
        let trace = trace_substeps(&net, &points)?;
        trace.write_csv(&run.file("substeps.csv"))?;
        trace.plot("neuron-map substeps").save(&run.file("substeps.svg"))?;
        let occupancy = hull_occupancy(&trace.sets[0], &trace.sets[4], 0.05)?;
        report["hull_occupancy"] = json!(occupancy);
        report["compression"] = serde_json::to_value(compression_certificate(&net, &points))?;
    }
    write_json(&run.file("geometry.json"), &report)?;
    run.finish(report)
}

fn bound_cell<T: ToString>(v: Option<T>) -> String {
    v.map_or(String::new(), |v| v.to_string())
}

pub fn bounds(cfg: &RunConfig) -> Result<serde_json::Value, CliError> {
    let mut run = Run::start(cfg, "bounds")?;
    let b = &cfg.bounds;
    let table: Vec<BoundReport> = bounds_table(b.n, b.d, b.eps)?;
    let mut f = std::io::BufWriter::new(std::fs::File::create(run.file("bounds.csv"))?);
    writeln!(f, "name,n,d,eps,value,value_exact,value_ceil")?;
    for r in &table {
        writeln!(
            f,
            "{},{},{},{},{},{},{}",
            r.name,
            r.n,
            bound_cell(r.d),
            bound_cell(r.eps),
            r.value,
            bound_cell(r.value_exact),
            bound_cell(r.value_ceil)
        )?;
    }
    f.flush()?;

    let mut report = json!({ "bounds": table });
    if b.n_samples > 0 {
        let mut cfg = cfg.clone();
        if cfg.model.path.is_none() && cfg.system.map == MapKind::L63 {
            cfg.model.path = Some("bundled:table1".into());
        }
        if cfg.model.path.is_some() {
            let net = require_model(&cfg)?;
            let truth = TruthMap::from_config(&cfg);
            let pool = load_pool(&cfg, &truth)?;
            let cloud = attractor_cloud(&pool.pairs);
            report["nn_poly_error"] = serde_json::to_value(nn_poly_error(&net, &truth, &cloud, b.n_samples, b.seed)?)?;
        }
    }
    write_json(&run.file("bounds.json"), &report)?;
    run.finish(report)
}

pub fn sweep_cmd(cfg: &RunConfig) -> Result<serde_json::Value, CliError> {
    let mut run = Run::start(cfg, "sweep")?;
    let truth = TruthMap::from_config(cfg);
    let pool = load_pool(cfg, &truth)?;
    let test = sample_pairs(
        &pool.pairs,
        cfg.dataset.n_test.min(pool.pairs.len()),
        &geochaos::dataset::RegionFilter::none(),
        test_seed(cfg.dataset.seed),
    )?;
    let spec = cfg.sweep_spec()?;
    let cells = if cfg.sweep.with_ftle {
        let horizon = *cfg
            .ftle
            .horizons
            .first()
            .ok_or_else(|| CliError::Config("ftle.horizons is empty".into()))?;
        let cmp = CompareSpec {
            horizons: vec![horizon],
            ..cfg.compare_spec()
        };
        let baseline = truth_baseline(&truth, &attractor_cloud(&pool.pairs), &cmp)?;
        let ftle = SweepFtle {
            baseline: &baseline,
            cloud: PoolSpec {
                n_traj: cfg.ftle.emulator_traj,
                ..cfg.pool_spec()
            },
            cloud_seed: cfg.ftle.seed,
        };
        sweep(&pool.pairs, &test, &spec, Some(&ftle))
    } else {
        sweep(&pool.pairs, &test, &spec, None)
    };
    write_sweep_csv(&cells, &run.file("sweep.csv"))?;
    write_json(&run.file("sweep.json"), &cells)?;

    let colors = ["blue", "red", "green", "purple", "orange", "black"];
    let mut plot = Plot::new("test RMS error against hidden width", "neurons", "rms");
    for (k, &n_data) in cfg.sweep.n_data.iter().enumerate() {
        let pts: Vec<(f64, f64)> = cells
            .iter()
            .filter(|c| c.n_data == n_data)
            .filter_map(|c| c.rms.map(|r| (c.neurons as f64, r)))
            .collect();
        plot = plot.with(Series::dots(format!("{n_data} points"), colors[k % colors.len()], pts));
    }
    plot.save(&run.file("sweep.svg"))?;
    let failed = cells.iter().filter(|c| c.error.is_some()).count();
    run.finish(json!({ "cells": cells.len(), "failed": failed }))
}
