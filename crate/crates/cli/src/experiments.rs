//! Pieces shared by the subcommands and the acceptance suite.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use geochaos::dataset::{attractor_cloud, generate_pool, import_pool, PairPool, PointCloud, PoolSpec};
use geochaos::dynamics::{iterate, DifferentiableMap, DiscreteMap, HenonMap, L63Map};
use geochaos::network::bundled;
use geochaos::spatial::PointIndex;
use geochaos::Mlp;

use crate::config::{MapKind, RunConfig};
use crate::error::CliError;

/// The true system selected by a config.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruthMap {
    L63(L63Map),
    Henon(HenonMap),
}

impl TruthMap {
    pub fn from_config(cfg: &RunConfig) -> Self {
        match cfg.system.map {
            MapKind::L63 => TruthMap::L63(L63Map {
                params: cfg.system.l63,
                tol: cfg.system.tolerance,
            }),
            MapKind::Henon => TruthMap::Henon(HenonMap::new(cfg.system.henon)),
        }
    }
}

impl DiscreteMap for TruthMap {
    fn dim(&self) -> usize {
        match self {
            TruthMap::L63(m) => m.dim(),
            TruthMap::Henon(m) => m.dim(),
        }
    }

    fn apply_into(&self, state: &[f64], out: &mut [f64]) {
        match self {
            TruthMap::L63(m) => m.apply_into(state, out),
            TruthMap::Henon(m) => m.apply_into(state, out),
        }
    }

    fn map_id(&self) -> String {
        match self {
            TruthMap::L63(m) => m.map_id(),
            TruthMap::Henon(m) => m.map_id(),
        }
    }

    fn params_json(&self) -> serde_json::Value {
        match self {
            TruthMap::L63(m) => m.params_json(),
            TruthMap::Henon(m) => m.params_json(),
        }
    }
}

/// Imports the configured pool file, or generates the pool.
pub fn load_pool(cfg: &RunConfig, truth: &TruthMap) -> Result<PairPool, CliError> {
    match &cfg.dataset.pool {
        Some(path) => {
            let pool = import_pool(path)?;
            if pool.pairs.dim() != cfg.dim() {
                return Err(CliError::Config(format!(
                    "pool {} is {}-dimensional, config expects {}",
                    path.display(),
                    pool.pairs.dim(),
                    cfg.dim()
                )));
            }
            Ok(pool)
        }
        None => Ok(generate_pool(truth, &cfg.pool_spec(), cfg.dataset.seed)?),
    }
}

/// Model file path or one of the bundled names.
pub fn load_model(spec: &str) -> Result<Mlp, CliError> {
    Ok(match spec {
        "bundled:table1" => bundled::table1(),
        "bundled:table1-printed" => bundled::table1_printed(),
        "bundled:table2" => bundled::table2(),
        s if s.starts_with("bundled:") => {
            return Err(CliError::Config(format!(
                "unknown bundled model `{s}` (table1, table1-printed, table2)"
            )))
        }
        path => Mlp::load(Path::new(path))?,
    })
}

/// A point on the attractor of `map`: the first retained state of one
/// trajectory drawn under `spec`.
pub fn attractor_start<M: DiscreteMap + ?Sized>(map: &M, spec: &PoolSpec, seed: u64) -> Result<Vec<f64>, CliError> {
    let one = PoolSpec {
        n_traj: 1,
        n_steps: spec.n_discard + 1,
        ..spec.clone()
    };
    let pool = generate_pool(map, &one, seed)?;
    Ok(pool.pairs.input(0).to_vec())
}

pub fn emulator_cloud(net: &Mlp, spec: &PoolSpec, seed: u64) -> Result<PointCloud, CliError> {
    Ok(attractor_cloud(&generate_pool(net, spec, seed)?.pairs))
}

/// Axis-aligned box with inclusive bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoundingBox {
    /// [-25, 25] x [-30, 30] x [0, 55].
    pub fn l63() -> Self {
        Self {
            lower: vec![-25.0, -30.0, 0.0],
            upper: vec![25.0, 30.0, 55.0],
        }
    }

    /// [-1.5, 1.5] x [-0.5, 0.5].
    pub fn henon() -> Self {
        Self {
            lower: vec![-1.5, -0.5],
            upper: vec![1.5, 0.5],
        }
    }

    pub fn for_map(kind: MapKind) -> Self {
        match kind {
            MapKind::L63 => Self::l63(),
            MapKind::Henon => Self::henon(),
        }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }
}

/// Boundedness and proximity of an emulator orbit to the true attractor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionCheck {
    pub n_steps: usize,
    /// First step outside the box, if any.
    pub left_box_at: Option<usize>,
    /// Step at which iteration blew up, if it did.
    pub diverged_at: Option<usize>,
    /// Mean distance from orbit points to their nearest true-attractor point.
    pub mean_nn_distance: f64,
    pub threshold: f64,
    pub passed: bool,
}

pub fn reconstruction_check<M: DiscreteMap + ?Sized>(
    map: &M,
    start: &[f64],
    n_steps: usize,
    truth_index: &PointIndex,
    bbox: &BoundingBox,
    threshold: f64,
) -> ReconstructionCheck {
    match iterate(map, start, n_steps, f64::MAX) {
        Ok(orbit) => {
            let left_box_at = orbit.points().position(|p| !bbox.contains(p));
            let mean = orbit.points().map(|p| truth_index.nearest(p).1).sum::<f64>() / orbit.len() as f64;
            ReconstructionCheck {
                n_steps,
                left_box_at,
                diverged_at: None,
                mean_nn_distance: mean,
                threshold,
                passed: left_box_at.is_none() && mean < threshold,
            }
        }
        Err(e) => ReconstructionCheck {
            n_steps,
            left_box_at: None,
            diverged_at: Some(match e {
                geochaos::error::DynamicsError::Diverged { step } => step,
                _ => 0,
            }),
            mean_nn_distance: f64::INFINITY,
            threshold,
            passed: false,
        },
    }
}

/// Largest entrywise deviation of the Jacobian over `points` from its value
/// at the first point.
pub fn jacobian_variation<M: DifferentiableMap + ?Sized>(map: &M, points: &[Vec<f64>]) -> f64 {
    let Some(first) = points.first() else {
        return 0.0;
    };
    let j0: DMatrix<f64> = map.step_jacobian(first);
    points
        .iter()
        .map(|p| (map.step_jacobian(p) - &j0).amax())
        .fold(0.0, f64::max)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
