//! Declarative run configuration: TOML file merged over per-map defaults,
//! then command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use geochaos::dataset::{InitBox, PoolSpec, RegionFilter};
use geochaos::dynamics::{HenonParams, IntegratorTolerance, L63Params, DEFAULT_DIVERGENCE_GUARD};
use geochaos::ftle::{CompareSpec, DEFAULT_EPS};
use geochaos::training::{ArchSpec, SweepSpec, TrainConfig};
use geochaos::Activation;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    L63,
    Henon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub map: MapKind,
    pub l63: L63Params,
    pub henon: HenonParams,
    pub tolerance: IntegratorTolerance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub n_traj: usize,
    pub n_steps: usize,
    pub n_discard: usize,
    pub init_lower: Vec<f64>,
    pub init_upper: Vec<f64>,
    pub guard: f64,
    pub seed: u64,
    /// Existing pool CSV to reuse instead of generating one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pool: Option<PathBuf>,
    pub n_train: usize,
    pub n_validation: usize,
    pub n_test: usize,
    /// Training-region filter such as `x>-5`; empty for none.
    pub filter: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub neurons: Vec<usize>,
    pub activation: Activation,
    /// Model file, or `bundled:table1`, `bundled:table1-printed`, `bundled:table2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FtleConfig {
    pub n_pairs: usize,
    pub horizons: Vec<usize>,
    pub eps: f64,
    pub seed: u64,
    /// Trajectories used to build the emulator's attractor cloud.
    pub emulator_traj: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryConfig {
    pub n_steps: usize,
    /// Defaults to a point on the true attractor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub neurons: Vec<usize>,
    pub n_data: Vec<usize>,
    pub activations: Vec<Activation>,
    pub seeds: Vec<u64>,
    pub with_ftle: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    pub n: u32,
    pub d: u32,
    pub eps: f64,
    pub n_samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub dataset: DatasetConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub ftle: FtleConfig,
    pub trajectory: TrajectoryConfig,
    pub sweep: SweepConfig,
    pub bounds: BoundsConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn defaults(map: MapKind) -> Self {
        let (init, n_train, neurons, horizons) = match map {
            MapKind::L63 => (InitBox::l63(), 40, 4, vec![5, 50, 100, 500]),
            MapKind::Henon => (InitBox::henon(), 20, 2, vec![5, 20, 50]),
        };
        let pool = PoolSpec::l63();
        Self {
            system: SystemConfig {
                map,
                l63: L63Params::default(),
                henon: HenonParams::default(),
                tolerance: IntegratorTolerance::default(),
            },
            dataset: DatasetConfig {
                n_traj: pool.n_traj,
                n_steps: pool.n_steps,
                n_discard: pool.n_discard,
                init_lower: init.lower,
                init_upper: init.upper,
                guard: DEFAULT_DIVERGENCE_GUARD,
                seed: 0,
                pool: None,
                n_train,
                n_validation: 2000,
                n_test: 5000,
                filter: String::new(),
            },
            model: ModelConfig {
                neurons: vec![neurons],
                activation: Activation::Tanh,
                path: None,
            },
            train: TrainConfig::default(),
            ftle: FtleConfig {
                n_pairs: 2000,
                horizons,
                eps: DEFAULT_EPS,
                seed: 0,
                emulator_traj: pool.n_traj,
            },
            trajectory: TrajectoryConfig {
                n_steps: 2000,
                start: None,
            },
            sweep: SweepConfig {
                neurons: (3..=8).collect(),
                n_data: vec![40, 100, 150],
                activations: vec![Activation::Tanh],
                seeds: vec![0],
                with_ftle: true,
            },
            bounds: BoundsConfig {
                n: 3,
                d: 2,
                eps: 1.0,
                n_samples: 5000,
                seed: 0,
            },
            output: OutputConfig { dir: PathBuf::from("out") },
        }
    }

    /// Parses TOML text over the defaults of the map it names (or `map`).
    pub fn from_toml(text: &str, map: Option<MapKind>) -> Result<Self, CliError> {
        let user: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        let named = user
            .get("system")
            .and_then(|s| s.get("map"))
            .map(|v| v.clone().try_into::<MapKind>())
            .transpose()
            .map_err(|e| CliError::Config(format!("system.map: {e}")))?;
        let kind = map.or(named).unwrap_or(MapKind::L63);
        let mut base = toml::Table::try_from(Self::defaults(kind)).map_err(|e| CliError::Config(e.to_string()))?;
        merge(&mut base, user);
        if let Some(toml::Value::Table(system)) = base.get_mut("system") {
            system.insert("map".into(), toml::Value::try_from(kind).expect("map kind serializes"));
        }
        let cfg: Self = toml::Value::Table(base)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, map: Option<MapKind>) -> Result<Self, CliError> {
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                Self::from_toml(&text, map)
            }
            None => Self::from_toml("", map),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        let d = &self.dataset;
        let dim = self.dim();
        if d.init_lower.len() != dim || d.init_upper.len() != dim {
            return bad(format!("init box must have {dim} coordinates"));
        }
        if d.init_lower.iter().zip(&d.init_upper).any(|(l, u)| l > u) {
            return bad("init box lower corner exceeds upper corner".into());
        }
        if d.n_discard >= d.n_steps {
            return bad(format!("dataset.n_discard ({}) must be < n_steps ({})", d.n_discard, d.n_steps));
        }
        if d.n_train == 0 || d.n_traj == 0 {
            return bad("dataset.n_train and n_traj must be >= 1".into());
        }
        self.filter()?;
        if self.model.neurons.is_empty() || self.model.neurons.contains(&0) {
            return bad("model.neurons must list positive widths".into());
        }
        if self.train.epochs == 0 || self.train.restarts == 0 || !(self.train.mu_init > 0.0) {
            return bad("train.epochs, train.restarts and train.mu_init must be positive".into());
        }
        if self.ftle.horizons.contains(&0) || !(self.ftle.eps > 0.0) {
            return bad("ftle horizons and eps must be positive".into());
        }
        if let Some(s) = &self.trajectory.start {
            if s.len() != dim {
                return bad(format!("trajectory.start must have {dim} coordinates"));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self.system.map {
            MapKind::L63 => 3,
            MapKind::Henon => 2,
        }
    }

    /// Time per map step.
    pub fn dt(&self) -> f64 {
        match self.system.map {
            MapKind::L63 => self.system.l63.dt,
            MapKind::Henon => 1.0,
        }
    }

    pub fn filter(&self) -> Result<RegionFilter, CliError> {
        self.dataset
            .filter
            .parse()
            .map_err(|e: geochaos::error::DatasetError| CliError::Config(e.to_string()))
    }

    pub fn pool_spec(&self) -> PoolSpec {
        let d = &self.dataset;
        PoolSpec {
            n_traj: d.n_traj,
            n_steps: d.n_steps,
            n_discard: d.n_discard,
            init_box: InitBox::new(d.init_lower.clone(), d.init_upper.clone()),
            guard: d.guard,
        }
    }

    pub fn arch(&self) -> ArchSpec {
        ArchSpec {
            input_dim: self.dim(),
            hidden: self.model.neurons.clone(),
            output_dim: self.dim(),
            activation: self.model.activation,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.dataset.seed,
            ..self.train.clone()
        }
    }

    pub fn compare_spec(&self) -> CompareSpec {
        CompareSpec {
            n_pairs: self.ftle.n_pairs,
            horizons: self.ftle.horizons.clone(),
            dt: self.dt(),
            eps: self.ftle.eps,
            seed: self.ftle.seed,
        }
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec, CliError> {
        Ok(SweepSpec {
            neurons: self.sweep.neurons.clone(),
            n_data: self.sweep.n_data.clone(),
            activations: self.sweep.activations.clone(),
            seeds: self.sweep.seeds.clone(),
            train: self.train.clone(),
            filter: self.filter()?,
            n_validation: self.dataset.n_validation,
        })
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        for kind in [MapKind::L63, MapKind::Henon] {
            let cfg = RunConfig::defaults(kind);
            let back = RunConfig::from_toml(&cfg.to_toml(), None).unwrap();
            assert_eq!(cfg, back);
        }
    }

    #[test]
    fn partial_file_overrides_defaults() {
        let cfg = RunConfig::from_toml("[dataset]\nn_train = 100\nfilter = \"x>-5\"\n[model]\nneurons = [5]\n", None).unwrap();
        assert_eq!(cfg.dataset.n_train, 100);
        assert_eq!(cfg.model.neurons, vec![5]);
        assert_eq!(cfg.dataset.n_traj, 1000);
        assert_eq!(cfg.filter().unwrap(), RegionFilter::above(0, -5.0));
    }

    #[test]
    fn henon_defaults_follow_the_map() {
        let cfg = RunConfig::from_toml("[system]\nmap = \"henon\"\n", None).unwrap();
        assert_eq!(cfg.dim(), 2);
        assert_eq!(cfg.dataset.n_train, 20);
        assert_eq!(cfg.dt(), 1.0);
        let forced = RunConfig::from_toml("", Some(MapKind::Henon)).unwrap();
        assert_eq!(forced, cfg);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(matches!(RunConfig::from_toml("[dataset]\nn_discard = 9000\n", None), Err(CliError::Config(_))));
        assert!(matches!(RunConfig::from_toml("[dataset]\nunknown = 1\n", None), Err(CliError::Config(_))));
        assert!(matches!(RunConfig::from_toml("[model]\nactivation = \"sine\"\n", None), Err(CliError::Config(_))));
        assert!(matches!(RunConfig::from_toml("not toml", None), Err(CliError::Config(_))));
    }
}
