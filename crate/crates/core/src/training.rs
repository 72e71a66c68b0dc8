//! Levenberg-Marquardt training under Bayesian regularization.
//!
//! The objective is `F = beta * E_D + alpha * E_W` with `E_D` the sum of
//! squared residuals and `E_W` the sum of squared parameters. After every
//! accepted step the hyperparameters are re-estimated from the effective
//! number of parameters `gamma = K - alpha * tr((beta JᵀJ + alpha I)⁻¹)`:
//! `alpha = gamma / (2 E_W)`, `beta = (N - gamma) / (2 E_D)`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{attractor_cloud, generate_pool, sample_pairs, Pairs, PoolSpec, RegionFilter};
use crate::error::TrainError;
use crate::ftle::{compare_with_baseline, TruthBaseline};
use crate::network::{Activation, Layer, Mlp, TrainingMeta};
use crate::rng::{streams, substream};

/// Layer widths and hidden activation of a network to train.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchSpec {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub output_dim: usize,
    pub activation: Activation,
}

impl ArchSpec {
    pub fn single(dim: usize, neurons: usize, activation: Activation) -> Self {
        Self {
            input_dim: dim,
            hidden: vec![neurons],
            output_dim: dim,
            activation,
        }
    }

    pub fn param_count(&self) -> usize {
        let mut widths = vec![self.input_dim];
        widths.extend(&self.hidden);
        widths.push(self.output_dim);
        widths.windows(2).map(|w| w[1] * (w[0] + 1)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub restarts: usize,
    pub mu_init: f64,
    pub mu_dec: f64,
    pub mu_inc: f64,
    pub mu_max: f64,
    /// Re-estimate alpha and beta after each accepted step. When false the
    /// trainer is plain Levenberg-Marquardt on `E_D`.
    pub bayesian: bool,
    /// Half-width of the uniform initialization, relative to the data spread.
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 1000,
            restarts: 5,
            mu_init: 0.005,
            mu_dec: 0.1,
            mu_inc: 10.0,
            mu_max: 1e10,
            bayesian: true,
            init_scale: 1.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<(), TrainError> {
        if self.epochs == 0 {
            return Err(TrainError::Config("epochs must be >= 1".into()));
        }
        if self.restarts == 0 {
            return Err(TrainError::Config("restarts must be >= 1".into()));
        }
        if !(self.mu_init > 0.0) {
            return Err(TrainError::Config("mu_init must be > 0".into()));
        }
        if !(self.mu_dec > 0.0 && self.mu_dec < 1.0 && self.mu_inc > 1.0) {
            return Err(TrainError::Config("need 0 < mu_dec < 1 < mu_inc".into()));
        }
        Ok(())
    }
}

/// State after one accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Objective before the step, under the hyperparameters used for the step.
    pub f_before: f64,
    /// Objective after the step, same hyperparameters.
    pub f_after: f64,
    pub ed: f64,
    pub ew: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    EpochLimit,
    /// No step decreased `F` before `mu` exceeded `mu_max`.
    MuLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Final sum of squared residuals on the training set.
    pub ed: f64,
    pub ew: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub param_count: usize,
    pub n_residuals: usize,
    pub trace: Vec<EpochRecord>,
    pub stop_reason: StopReason,
    pub selected_restart: usize,
    /// Selection score of every restart (validation `E_D`, or training `E_D`
    /// without a validation set); `None` where the restart failed.
    pub restart_scores: Vec<Option<f64>>,
}

/// Residuals `net(x) - x'` stacked pair-major, and their parameter Jacobian.
fn residuals_and_jacobian(net: &Mlp, data: &Pairs) -> (DVector<f64>, DMatrix<f64>) {
    let n_out = net.output_dim();
    let k = net.param_count();
    let mut e = DVector::zeros(data.len() * n_out);
    let mut j = DMatrix::zeros(data.len() * n_out, k);
    for (p, (x, target)) in data.iter().enumerate() {
        let (out, jac) = net.param_jacobian(x);
        for o in 0..n_out {
            e[p * n_out + o] = out[o] - target[o];
        }
        j.rows_mut(p * n_out, n_out).copy_from(&jac);
    }
    (e, j)
}

/// `K - alpha tr((beta JᵀJ + alpha I)⁻¹)`, evaluated on the spectrum of JᵀJ so
/// it stays finite when `beta` dwarfs `alpha`.
pub fn effective_params(jtj: &DMatrix<f64>, alpha: f64, beta: f64) -> f64 {
    if alpha <= 0.0 {
        return jtj.nrows() as f64;
    }
    jtj.clone()
        .symmetric_eigenvalues()
        .iter()
        .map(|&l| {
            let bl = beta * l.max(0.0);
            bl / (bl + alpha)
        })
        .sum::<f64>()
        .clamp(0.0, jtj.nrows() as f64)
}

/// Sum of squared residuals of `net` on `data`.
pub fn sum_squared_error(net: &Mlp, data: &Pairs) -> f64 {
    data.iter()
        .map(|(x, y)| {
            net.forward(x)
                .iter()
                .zip(y)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        })
        .sum()
}

/// Root-mean-square residual over all pairs and output components.
pub fn rms_error(net: &Mlp, data: &Pairs) -> f64 {
    assert!(!data.is_empty(), "rms of an empty test set");
    (sum_squared_error(net, data) / (data.len() * net.output_dim()) as f64).sqrt()
}

fn spread(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Uniform initialization scaled so hidden pre-activations start at O(1) and
/// outputs at the spread of the targets.
fn initialize(arch: &ArchSpec, data: &Pairs, scale: f64, rng: &mut impl Rng) -> Mlp {
    let dim_in = arch.input_dim;
    let in_spread = (0..dim_in)
        .map(|a| spread(&data.iter().map(|(x, _)| x[a]).collect::<Vec<_>>()).1)
        .fold(0.0, f64::max)
        .max(1e-12);
    let out_stats: Vec<(f64, f64)> = (0..arch.output_dim)
        .map(|a| spread(&data.iter().map(|(_, y)| y[a]).collect::<Vec<_>>()))
        .collect();
    let out_spread = out_stats.iter().map(|s| s.1).fold(0.0, f64::max).max(1e-12);

    let mut widths = vec![dim_in];
    widths.extend(&arch.hidden);
    widths.push(arch.output_dim);
    let n_layers = widths.len() - 1;
    let mut layers = Vec::with_capacity(n_layers);
    for (li, w) in widths.windows(2).enumerate() {
        let (cols, rows) = (w[0], w[1]);
        let last = li + 1 == n_layers;
        let weight_scale = match (li, last) {
            (0, _) => scale / in_spread,
            (_, true) => scale * out_spread,
            _ => scale,
        };
        let weights = DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0) * weight_scale);
        let bias = if last {
            DVector::from_iterator(rows, out_stats.iter().map(|s| s.0))
        } else {
            DVector::from_fn(rows, |_, _| rng.random_range(-1.0..1.0))
        };
        layers.push(Layer::new(weights, bias));
    }
    Mlp::new(layers, arch.activation).expect("initialized shapes chain")
}

fn check_data(arch: &ArchSpec, data: &Pairs) -> Result<(), TrainError> {
    if data.is_empty() {
        return Err(TrainError::EmptyData);
    }
    if arch.input_dim != data.dim() || arch.output_dim != data.dim() {
        return Err(TrainError::DimensionMismatch {
            arch_in: arch.input_dim,
            arch_out: arch.output_dim,
            data_in: data.dim(),
            data_out: data.dim(),
        });
    }
    Ok(())
}

/// Trains one network from `net`'s current parameters.
pub fn train_from(mut net: Mlp, data: &Pairs, cfg: &TrainConfig) -> Result<(Mlp, TrainReport), TrainError> {
    cfg.validate()?;
    let k = net.param_count();
    let n_res = data.len() * net.output_dim();

    let mut w = DVector::from_vec(net.params());
    let (mut e, mut jac) = residuals_and_jacobian(&net, data);
    let mut ed = e.norm_squared();
    let mut ew = w.norm_squared();
    if !ed.is_finite() {
        return Err(TrainError::Diverged);
    }
    let (mut alpha, mut beta) = (0.0, 1.0);
    let mut gamma = k as f64;
    let mut mu = cfg.mu_init;
    let mut trace = Vec::with_capacity(cfg.epochs);
    let mut stop_reason = StopReason::EpochLimit;
    let identity = DMatrix::<f64>::identity(k, k);

    'epochs: for epoch in 0..cfg.epochs {
        let f = beta * ed + alpha * ew;
        let jtj = jac.tr_mul(&jac);
        let grad = beta * jac.tr_mul(&e) + alpha * &w;
        loop {
            let system = beta * &jtj + (alpha + mu) * &identity;
            let Some(chol) = system.cholesky() else {
                mu *= cfg.mu_inc;
                if mu > cfg.mu_max {
                    stop_reason = StopReason::MuLimit;
                    break 'epochs;
                }
                continue;
            };
            let trial_w = &w - chol.solve(&grad);
            net.set_params(trial_w.as_slice());
            let (trial_e, trial_j) = residuals_and_jacobian(&net, data);
            let trial_ed = trial_e.norm_squared();
            let trial_ew = trial_w.norm_squared();
            let trial_f = beta * trial_ed + alpha * trial_ew;
            if trial_f.is_finite() && trial_f < f {
                mu = (mu * cfg.mu_dec).max(f64::MIN_POSITIVE);
                w = trial_w;
                e = trial_e;
                jac = trial_j;
                ed = trial_ed;
                ew = trial_ew;
                trace.push(EpochRecord {
                    epoch,
                    f_before: f,
                    f_after: trial_f,
                    ed,
                    ew,
                    alpha,
                    beta,
                    gamma,
                    mu,
                });
                break;
            }
            mu *= cfg.mu_inc;
            if mu > cfg.mu_max {
                net.set_params(w.as_slice());
                stop_reason = StopReason::MuLimit;
                break 'epochs;
            }
        }

        if cfg.bayesian {
            if alpha > 0.0 {
                gamma = effective_params(&jac.tr_mul(&jac), alpha, beta);
            } else {
                gamma = k as f64;
            }
            alpha = gamma / (2.0 * ew.max(f64::MIN_POSITIVE));
            beta = (n_res as f64 - gamma).max(1e-3) / (2.0 * ed.max(f64::MIN_POSITIVE));
            if !(alpha.is_finite() && beta.is_finite()) {
                return Err(TrainError::Diverged);
            }
            if let Some(last) = trace.last_mut() {
                last.alpha = alpha;
                last.beta = beta;
                last.gamma = gamma;
            }
        }
    }
    net.set_params(w.as_slice());

    let report = TrainReport {
        ed,
        ew,
        alpha,
        beta,
        gamma,
        param_count: k,
        n_residuals: n_res,
        trace,
        stop_reason,
        selected_restart: 0,
        restart_scores: vec![Some(ed)],
    };
    Ok((net, report))
}

/// Trains `cfg.restarts` independently initialized networks and returns the
/// one with the lowest `E_D` on `validation` (the training set if `None`).
pub fn train_with_validation(
    arch: &ArchSpec,
    data: &Pairs,
    validation: Option<&Pairs>,
    cfg: &TrainConfig,
) -> Result<(Mlp, TrainReport), TrainError> {
    cfg.validate()?;
    check_data(arch, data)?;
    if let Some(v) = validation {
        check_data(arch, v)?;
    }
    let runs: Vec<Result<(Mlp, TrainReport), TrainError>> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(cfg.seed, streams::TRAIN_INIT + r as u64);
            let init = initialize(arch, data, cfg.init_scale, &mut rng);
            train_from(init, data, cfg)
        })
        .collect();

    let scores: Vec<Option<f64>> = runs
        .iter()
        .map(|r| {
            r.as_ref().ok().map(|(net, rep)| match validation {
                Some(v) => sum_squared_error(net, v),
                None => rep.ed,
            })
            .filter(|s| s.is_finite())
        })
        .collect();
    let best = scores
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.map(|s| (i, s)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i);
    let Some(best) = best else {
        // every restart failed; surface the first error
        return Err(runs.into_iter().find_map(Result::err).unwrap_or(TrainError::Diverged));
    };
    let (mut net, mut report) = runs.into_iter().nth(best).unwrap().unwrap();
    report.selected_restart = best;
    report.restart_scores = scores;
    net.training_meta = TrainingMeta {
        seed: Some(cfg.seed),
        epochs: Some(cfg.epochs),
        n_train: Some(data.len()),
        note: None,
    };
    Ok((net, report))
}

pub fn train(arch: &ArchSpec, data: &Pairs, cfg: &TrainConfig) -> Result<(Mlp, TrainReport), TrainError> {
    train_with_validation(arch, data, None, cfg)
}

/// Seed of the validation draw that accompanies a training draw with `seed`.
pub fn validation_seed(seed: u64) -> u64 {
    seed ^ 0x5a5a_0000_0000_0000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub neurons: Vec<usize>,
    pub n_data: Vec<usize>,
    pub activations: Vec<Activation>,
    pub seeds: Vec<u64>,
    pub train: TrainConfig,
    #[serde(with = "filter_string")]
    pub filter: RegionFilter,
    pub n_validation: usize,
}

mod filter_string {
    use super::RegionFilter;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(f: &RegionFilter, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&f.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<RegionFilter, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// FTLE evaluation attached to a sweep: emulator clouds are generated with
/// `cloud` and compared against `baseline` at its first horizon.
pub struct SweepFtle<'a> {
    pub baseline: &'a TruthBaseline,
    pub cloud: PoolSpec,
    pub cloud_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub neurons: usize,
    pub n_data: usize,
    pub activation: Activation,
    pub seed: u64,
    pub rms: Option<f64>,
    pub ftle_rms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Trains every (neurons, n_data, activation, seed) cell and evaluates it on
/// `test`. Failures are recorded per cell.
pub fn sweep(pool: &Pairs, test: &Pairs, spec: &SweepSpec, ftle: Option<&SweepFtle>) -> Vec<SweepCell> {
    let mut cells = Vec::new();
    for &neurons in &spec.neurons {
        for &n_data in &spec.n_data {
            for &activation in &spec.activations {
                for &seed in &spec.seeds {
                    cells.push((neurons, n_data, activation, seed));
                }
            }
        }
    }
    cells
        .into_par_iter()
        .map(|(neurons, n_data, activation, seed)| {
            let mut cell = SweepCell {
                neurons,
                n_data,
                activation,
                seed,
                rms: None,
                ftle_rms: None,
                error: None,
            };
            let run = || -> Result<(Option<f64>, Option<f64>), String> {
                let data = sample_pairs(pool, n_data, &spec.filter, seed).map_err(|e| e.to_string())?;
                let val = sample_pairs(pool, spec.n_validation, &spec.filter, validation_seed(seed))
                    .map_err(|e| e.to_string())?;
                let arch = ArchSpec::single(pool.dim(), neurons, activation);
                let cfg = TrainConfig { seed, ..spec.train.clone() };
                let (net, _) = train_with_validation(&arch, &data, Some(&val), &cfg).map_err(|e| e.to_string())?;
                let rms = rms_error(&net, test);
                let ftle_rms = match ftle {
                    None => None,
                    Some(f) => {
                        let pool = generate_pool(&net, &f.cloud, f.cloud_seed).map_err(|e| e.to_string())?;
                        let cloud = attractor_cloud(&pool.pairs);
                        let res = compare_with_baseline(f.baseline, &net, &cloud).map_err(|e| e.to_string())?;
                        res.first().map(|r| r.rms).filter(|v| v.is_finite())
                    }
                };
                Ok((Some(rms).filter(|v| v.is_finite()), ftle_rms))
            };
            match run() {
                Ok((rms, ftle_rms)) => {
                    cell.rms = rms;
                    cell.ftle_rms = ftle_rms;
                }
                Err(e) => cell.error = Some(e),
            }
            cell
        })
        .collect()
}

pub fn write_sweep_csv(cells: &[SweepCell], path: &std::path::Path) -> std::io::Result<()> {
    use std::io::Write;
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "neurons,n_data,activation,seed,rms,ftle_rms")?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
    for c in cells {
        writeln!(
            f,
            "{},{},{},{},{},{}",
            c.neurons,
            c.n_data,
            c.activation.name(),
            c.seed,
            opt(c.rms),
            opt(c.ftle_rms)
        )?;
    }
    f.flush()
}
