//! Attractor-resident training pools.
//!
//! A pool is built by iterating many random initial conditions, discarding
//! the transient and keeping every consecutive `(x, map(x))` pair. Training
//! sets are drawn from a pool without replacement, optionally restricted to
//! pairs whose input lies in a [`RegionFilter`].

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{iterate, DiscreteMap, DEFAULT_DIVERGENCE_GUARD};
use crate::error::{DatasetError, DynamicsError};
use crate::rng::{streams, substream};

/// Consecutive diverging initial conditions tolerated per trajectory.
pub const MAX_CONSECUTIVE_RETRIES: usize = 10;

/// Axis-aligned box of initial conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl InitBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len(), upper.len());
        Self { lower, upper }
    }

    /// `[-20, 20] x [-20, 20] x [0, 50]`.
    pub fn l63() -> Self {
        Self::new(vec![-20.0, -20.0, 0.0], vec![20.0, 20.0, 50.0])
    }

    /// A neighbourhood of the origin inside the Hénon basin of attraction.
    pub fn henon() -> Self {
        Self::new(vec![-0.2, -0.2], vec![0.2, 0.2])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    fn draw(&self, rng: &mut impl Rng) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&lo, &hi)| if hi > lo { rng.random_range(lo..hi) } else { lo })
            .collect()
    }
}

/// Trajectory schedule for [`generate_pool`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolSpec {
    pub n_traj: usize,
    pub n_steps: usize,
    pub n_discard: usize,
    pub init_box: InitBox,
    #[serde(default = "default_guard")]
    pub guard: f64,
}

fn default_guard() -> f64 {
    DEFAULT_DIVERGENCE_GUARD
}

impl PoolSpec {
    /// 1000 trajectories of 2500 steps, the first 2000 discarded.
    pub fn l63() -> Self {
        Self {
            n_traj: 1000,
            n_steps: 2500,
            n_discard: 2000,
            init_box: InitBox::l63(),
            guard: DEFAULT_DIVERGENCE_GUARD,
        }
    }

    pub fn henon() -> Self {
        Self {
            init_box: InitBox::henon(),
            ..Self::l63()
        }
    }

    pub fn pool_size(&self) -> usize {
        self.n_traj * (self.n_steps - self.n_discard)
    }
}

/// Input/output pairs stored as two flat row-major buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct Pairs {
    dim: usize,
    inputs: Vec<f64>,
    outputs: Vec<f64>,
}

impl Pairs {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn from_flat(dim: usize, inputs: Vec<f64>, outputs: Vec<f64>) -> Self {
        assert_eq!(inputs.len(), outputs.len());
        assert_eq!(inputs.len() % dim, 0);
        Self {
            dim,
            inputs,
            outputs,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.inputs.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn push(&mut self, input: &[f64], output: &[f64]) {
        self.inputs.extend_from_slice(input);
        self.outputs.extend_from_slice(output);
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn output(&self, i: usize) -> &[f64] {
        &self.outputs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], &[f64])> {
        self.inputs
            .chunks_exact(self.dim)
            .zip(self.outputs.chunks_exact(self.dim))
    }

    pub fn inputs_flat(&self) -> &[f64] {
        &self.inputs
    }

    pub fn outputs_flat(&self) -> &[f64] {
        &self.outputs
    }

    pub fn select(&self, indices: &[usize]) -> Pairs {
        let mut out = Pairs::new(self.dim);
        for &i in indices {
            out.push(self.input(i), self.output(i));
        }
        out
    }
}

/// A generated pool plus everything needed to regenerate it.
#[derive(Debug, Clone, PartialEq)]
pub struct PairPool {
    pub pairs: Pairs,
    pub map_id: String,
    pub params: serde_json::Value,
    pub seed: u64,
    pub spec: PoolSpec,
    /// Initial conditions redrawn because their trajectory diverged.
    pub retries: usize,
}

/// Builds an attractor pool by iterating `spec.n_traj` random starts.
///
/// Trajectory `i` draws its initial conditions from substream `i` of `seed`,
/// so the pool is identical regardless of thread count. Pairs are ordered by
/// trajectory, then step.
pub fn generate_pool<M: DiscreteMap + ?Sized>(
    map: &M,
    spec: &PoolSpec,
    seed: u64,
) -> Result<PairPool, DatasetError> {
    if spec.n_discard >= spec.n_steps {
        return Err(DatasetError::InvalidSchedule {
            n_steps: spec.n_steps,
            n_discard: spec.n_discard,
        });
    }
    let dim = map.dim();
    if spec.init_box.dim() != dim {
        return Err(DatasetError::BoxDimension {
            expected: dim,
            got: spec.init_box.dim(),
        });
    }

    let per_traj: Vec<Result<(Vec<f64>, usize), DatasetError>> = (0..spec.n_traj)
        .into_par_iter()
        .map(|traj| {
            let mut rng = substream(seed, traj as u64);
            let mut failures = 0;
            loop {
                let s0 = spec.init_box.draw(&mut rng);
                match iterate(map, &s0, spec.n_steps, spec.guard) {
                    Ok(path) => {
                        let kept = path.as_flat()[spec.n_discard * dim..].to_vec();
                        return Ok((kept, failures));
                    }
                    Err(DynamicsError::Diverged { .. }) | Err(DynamicsError::NonFinite) => {
                        failures += 1;
                        if failures >= MAX_CONSECUTIVE_RETRIES {
                            return Err(DatasetError::TooManyRetries {
                                trajectory: traj,
                                retries: failures,
                            });
                        }
                    }
                    Err(e @ DynamicsError::DimensionMismatch { .. }) => {
                        unreachable!("init box dimension was checked: {e}")
                    }
                }
            }
        })
        .collect();

    let kept_len = spec.n_steps - spec.n_discard;
    let mut pairs = Pairs {
        dim,
        inputs: Vec::with_capacity(spec.pool_size() * dim),
        outputs: Vec::with_capacity(spec.pool_size() * dim),
    };
    let mut retries = 0;
    for r in per_traj {
        let (kept, failures) = r?;
        retries += failures;
        // kept holds states n_discard ..= n_steps
        pairs.inputs.extend_from_slice(&kept[..kept_len * dim]);
        pairs.outputs.extend_from_slice(&kept[dim..]);
    }

    Ok(PairPool {
        pairs,
        map_id: map.map_id(),
        params: map.params_json(),
        seed,
        spec: spec.clone(),
        retries,
    })
}

/// Optional open bounds on one axis: `lower < v < upper`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AxisBound {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl AxisBound {
    fn admits(&self, v: f64) -> bool {
        self.lower.is_none_or(|lo| v > lo) && self.upper.is_none_or(|hi| v < hi)
    }
}

/// Per-axis region restriction on pair inputs. Unlisted axes are unbounded.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RegionFilter {
    pub axes: Vec<AxisBound>,
}

impl RegionFilter {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn new(axes: Vec<AxisBound>) -> Result<Self, DatasetError> {
        for (i, b) in axes.iter().enumerate() {
            if let (Some(lo), Some(hi)) = (b.lower, b.upper) {
                if lo > hi {
                    return Err(DatasetError::InvalidFilter(format!(
                        "axis {i}: lower {lo} > upper {hi}"
                    )));
                }
            }
        }
        Ok(Self { axes })
    }

    /// Keeps points with `point[axis] > value`.
    pub fn above(axis: usize, value: f64) -> Self {
        let mut axes = vec![AxisBound::default(); axis + 1];
        axes[axis].lower = Some(value);
        Self { axes }
    }

    pub fn is_unbounded(&self) -> bool {
        self.axes
            .iter()
            .all(|b| b.lower.is_none() && b.upper.is_none())
    }

    pub fn admits(&self, point: &[f64]) -> bool {
        self.axes
            .iter()
            .zip(point)
            .all(|(b, &v)| b.admits(v))
    }
}

const AXIS_NAMES: [&str; 3] = ["x", "y", "z"];

impl fmt::Display for RegionFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (i, b) in self.axes.iter().enumerate() {
            let name = AXIS_NAMES.get(i).map(|s| s.to_string()).unwrap_or(i.to_string());
            if let Some(lo) = b.lower {
                parts.push(format!("{name}>{lo}"));
            }
            if let Some(hi) = b.upper {
                parts.push(format!("{name}<{hi}"));
            }
        }
        write!(f, "{}", parts.join(","))
    }
}

/// Parses comma-separated clauses such as `x>-5` or `x>-5,z<40`.
impl FromStr for RegionFilter {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut axes: Vec<AxisBound> = Vec::new();
        for clause in s.split(',').map(str::trim).filter(|c| !c.is_empty()) {
            let (pos, greater) = match (clause.find('>'), clause.find('<')) {
                (Some(p), None) => (p, true),
                (None, Some(p)) => (p, false),
                _ => {
                    return Err(DatasetError::InvalidFilter(format!(
                        "expected `axis>value` or `axis<value`, got `{clause}`"
                    )))
                }
            };
            let name = clause[..pos].trim().to_ascii_lowercase();
            let axis = AXIS_NAMES
                .iter()
                .position(|n| *n == name)
                .or_else(|| name.parse().ok())
                .ok_or_else(|| DatasetError::InvalidFilter(format!("unknown axis `{name}`")))?;
            let value: f64 = clause[pos + 1..]
                .trim()
                .parse()
                .map_err(|_| DatasetError::InvalidFilter(format!("bad number in `{clause}`")))?;
            if axes.len() <= axis {
                axes.resize(axis + 1, AxisBound::default());
            }
            if greater {
                axes[axis].lower = Some(value);
            } else {
                axes[axis].upper = Some(value);
            }
        }
        RegionFilter::new(axes)
    }
}

/// Indices of pairs whose input passes `filter`.
pub fn filtered_indices(pairs: &Pairs, filter: &RegionFilter) -> Vec<usize> {
    (0..pairs.len())
        .filter(|&i| filter.admits(pairs.input(i)))
        .collect()
}

/// Draws `k` distinct pairs uniformly among those whose input passes `filter`.
pub fn sample_pairs(
    pairs: &Pairs,
    k: usize,
    filter: &RegionFilter,
    seed: u64,
) -> Result<Pairs, DatasetError> {
    let candidates = filtered_indices(pairs, filter);
    if candidates.len() < k {
        return Err(DatasetError::InsufficientPairs {
            requested: k,
            available: candidates.len(),
        });
    }
    let mut rng = substream(seed, streams::SAMPLE);
    let chosen: Vec<usize> = rand::seq::index::sample(&mut rng, candidates.len(), k)
        .into_iter()
        .map(|j| candidates[j])
        .collect();
    Ok(pairs.select(&chosen))
}

/// Flat buffer of points.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    data: Vec<f64>,
}

impl PointCloud {
    pub fn from_flat(dim: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len() % dim, 0);
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for p in self.points() {
            for (a, v) in m.iter_mut().zip(p) {
                *a += v;
            }
        }
        let n = self.len() as f64;
        m.iter_mut().for_each(|a| *a /= n);
        m
    }
}

/// The pair inputs, with bit-identical duplicates removed (first kept).
pub fn attractor_cloud(pairs: &Pairs) -> PointCloud {
    let mut seen = HashSet::with_capacity(pairs.len());
    let mut data = Vec::with_capacity(pairs.inputs.len());
    for p in pairs.inputs.chunks_exact(pairs.dim) {
        let key: Vec<u64> = p.iter().map(|v| v.to_bits()).collect();
        if seen.insert(key) {
            data.extend_from_slice(p);
        }
    }
    PointCloud {
        dim: pairs.dim,
        data,
    }
}

/// JSON sidecar written next to a pool CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolSidecar {
    pub map_id: String,
    pub params: serde_json::Value,
    pub seed: u64,
    pub spec: PoolSpec,
    pub retries: usize,
    pub n_pairs: usize,
}

fn csv_header(dim: usize) -> Vec<String> {
    let names: Vec<String> = (0..dim)
        .map(|i| AXIS_NAMES.get(i).map(|s| s.to_string()).unwrap_or(format!("s{i}")))
        .collect();
    names
        .iter()
        .cloned()
        .chain(names.iter().map(|n| format!("{n}p")))
        .collect()
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Writes pairs as CSV with columns `x,y[,z],xp,yp[,zp]`.
pub fn write_pairs_csv(pairs: &Pairs, path: &Path) -> Result<(), DatasetError> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(csv_header(pairs.dim))?;
    let mut row = Vec::with_capacity(2 * pairs.dim);
    for (x, xp) in pairs.iter() {
        row.clear();
        row.extend(x.iter().chain(xp).map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_pairs_csv(path: &Path) -> Result<Pairs, DatasetError> {
    let mut r = csv::Reader::from_reader(BufReader::new(File::open(path)?));
    let header = r.headers()?.clone();
    if header.len() % 2 != 0 || header.is_empty() {
        return Err(DatasetError::Format(format!(
            "expected an even number of columns, got {}",
            header.len()
        )));
    }
    let dim = header.len() / 2;
    let mut pairs = Pairs::new(dim);
    for rec in r.records() {
        let rec = rec?;
        let vals: Result<Vec<f64>, _> = rec.iter().map(f64::from_str).collect();
        let vals = vals.map_err(|e| DatasetError::Format(e.to_string()))?;
        if vals.len() != 2 * dim {
            return Err(DatasetError::Format("ragged row".into()));
        }
        pairs.push(&vals[..dim], &vals[dim..]);
    }
    Ok(pairs)
}

/// Writes `<path>` (CSV) and `<path>.json` (sidecar).
pub fn export_pool(pool: &PairPool, path: &Path) -> Result<(), DatasetError> {
    write_pairs_csv(&pool.pairs, path)?;
    let side = PoolSidecar {
        map_id: pool.map_id.clone(),
        params: pool.params.clone(),
        seed: pool.seed,
        spec: pool.spec.clone(),
        retries: pool.retries,
        n_pairs: pool.pairs.len(),
    };
    let mut f = BufWriter::new(File::create(sidecar_path(path))?);
    serde_json::to_writer_pretty(&mut f, &side)?;
    f.write_all(b"\n")?;
    Ok(())
}

pub fn import_pool(path: &Path) -> Result<PairPool, DatasetError> {
    let pairs = read_pairs_csv(path)?;
    let side: PoolSidecar =
        serde_json::from_reader(BufReader::new(File::open(sidecar_path(path))?))?;
    if side.n_pairs != pairs.len() {
        return Err(DatasetError::Format(format!(
            "sidecar lists {} pairs, CSV has {}",
            side.n_pairs,
            pairs.len()
        )));
    }
    Ok(PairPool {
        pairs,
        map_id: side.map_id,
        params: side.params,
        seed: side.seed,
        spec: side.spec,
        retries: side.retries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{HenonMap, L63Map};

    fn small_l63(n_traj: usize) -> PairPool {
        let spec = PoolSpec {
            n_traj,
            n_steps: 600,
            n_discard: 500,
            ..PoolSpec::l63()
        };
        generate_pool(&L63Map::default(), &spec, 7).unwrap()
    }

    #[test]
    fn default_pool_size_arithmetic() {
        assert_eq!(PoolSpec::l63().pool_size(), 500_000);
    }

    #[test]
    fn single_pair_pool() {
        let map = HenonMap::default();
        let spec = PoolSpec {
            n_traj: 1,
            n_steps: 3,
            n_discard: 2,
            ..PoolSpec::henon()
        };
        let pool = generate_pool(&map, &spec, 42).unwrap();
        assert_eq!(pool.pairs.len(), 1);
        let s0 = spec.init_box.draw(&mut substream(42, 0));
        let path = iterate(&map, &s0, 3, DEFAULT_DIVERGENCE_GUARD).unwrap();
        assert_eq!(pool.pairs.input(0), path.point(2));
        assert_eq!(pool.pairs.output(0), path.point(3));
    }

    #[test]
    fn pairs_are_map_consistent() {
        let pool = small_l63(4);
        assert_eq!(pool.pairs.len(), 400);
        let map = L63Map::default();
        for (x, xp) in pool.pairs.iter() {
            assert_eq!(map.apply(x), xp);
        }
    }

    #[test]
    fn generation_rejects_bad_schedules() {
        let spec = PoolSpec {
            n_steps: 10,
            n_discard: 10,
            ..PoolSpec::henon()
        };
        assert!(matches!(
            generate_pool(&HenonMap::default(), &spec, 0),
            Err(DatasetError::InvalidSchedule { .. })
        ));
        assert!(matches!(
            generate_pool(&L63Map::default(), &PoolSpec::henon(), 0),
            Err(DatasetError::BoxDimension { .. })
        ));
    }

    #[test]
    fn divergent_box_exhausts_retries() {
        let spec = PoolSpec {
            n_traj: 2,
            n_steps: 50,
            n_discard: 10,
            init_box: InitBox::new(vec![5.0, 5.0], vec![6.0, 6.0]),
            guard: DEFAULT_DIVERGENCE_GUARD,
        };
        assert!(matches!(
            generate_pool(&HenonMap::default(), &spec, 0),
            Err(DatasetError::TooManyRetries { .. })
        ));
    }

    #[test]
    fn retries_are_counted() {
        // roughly half of this box escapes to infinity
        let spec = PoolSpec {
            n_traj: 40,
            n_steps: 200,
            n_discard: 100,
            init_box: InitBox::new(vec![-1.6, -0.5], vec![1.6, 0.5]),
            guard: DEFAULT_DIVERGENCE_GUARD,
        };
        let pool = generate_pool(&HenonMap::default(), &spec, 3).unwrap();
        assert!(pool.retries > 0);
        assert_eq!(pool.pairs.len(), 4000);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = small_l63(3);
        let b = small_l63(3);
        assert_eq!(a, b);
    }

    #[test]
    fn sampling_examples() {
        let pool = small_l63(2);
        let all = sample_pairs(&pool.pairs, pool.pairs.len(), &RegionFilter::none(), 1).unwrap();
        let key = |p: &Pairs| {
            let mut v: Vec<Vec<u64>> = p
                .iter()
                .map(|(x, y)| x.iter().chain(y).map(|v| v.to_bits()).collect())
                .collect();
            v.sort();
            v
        };
        assert_eq!(key(&all), key(&pool.pairs));
        assert!(sample_pairs(&pool.pairs, 0, &RegionFilter::none(), 1)
            .unwrap()
            .is_empty());
        let err = sample_pairs(&pool.pairs, 201, &RegionFilter::none(), 1).unwrap_err();
        assert!(matches!(
            err,
            DatasetError::InsufficientPairs {
                requested: 201,
                available: 200
            }
        ));
    }

    #[test]
    fn filtered_samples_respect_filter() {
        let pool = small_l63(10);
        let f: RegionFilter = "x>-5".parse().unwrap();
        let s = sample_pairs(&pool.pairs, 100, &f, 5).unwrap();
        assert!(s.iter().all(|(x, _)| x[0] > -5.0));
        let map = L63Map::default();
        assert!(s.iter().all(|(x, y)| map.apply(x) == y));
    }

    #[test]
    fn sampling_overlap_is_hypergeometric() {
        // draws of k from N with independent seeds overlap by k^2/N on average
        let pool = small_l63(2);
        let (n, k) = (pool.pairs.len(), 40usize);
        let key = |p: &Pairs| -> HashSet<Vec<u64>> {
            p.iter()
                .map(|(x, _)| x.iter().map(|v| v.to_bits()).collect())
                .collect()
        };
        let trials = 1000;
        let mut total = 0usize;
        for t in 0..trials {
            let a = key(&sample_pairs(&pool.pairs, k, &RegionFilter::none(), 2 * t).unwrap());
            let b = key(&sample_pairs(&pool.pairs, k, &RegionFilter::none(), 2 * t + 1).unwrap());
            total += a.intersection(&b).count();
        }
        let (nf, kf) = (n as f64, k as f64);
        let mean = kf * kf / nf;
        let var = kf * (kf / nf) * (1.0 - kf / nf) * (nf - kf) / (nf - 1.0);
        let observed = total as f64 / trials as f64;
        let sigma = (var / trials as f64).sqrt();
        assert!((observed - mean).abs() < 3.0 * sigma, "{observed} vs {mean} ± {sigma}");
    }

    #[test]
    fn filter_parsing() {
        let f: RegionFilter = "x>-5, z<40".parse().unwrap();
        assert!(f.admits(&[-4.0, 100.0, 39.0]));
        assert!(!f.admits(&[-5.0, 0.0, 0.0]));
        assert!(!f.admits(&[0.0, 0.0, 41.0]));
        assert_eq!(f.to_string(), "x>-5,z<40");
        assert!("x>1,x<0".parse::<RegionFilter>().is_err());
        assert!("w>1".parse::<RegionFilter>().is_err());
        assert!("".parse::<RegionFilter>().unwrap().is_unbounded());
    }

    #[test]
    fn cloud_deduplicates_bitwise() {
        let mut p = Pairs::new(2);
        p.push(&[0.0, 1.0], &[1.0, 2.0]);
        let c = attractor_cloud(&p);
        assert_eq!(c.len(), 1);
        p.push(&[0.0, 1.0], &[1.0, 2.0]);
        p.push(&[0.0, 1.0 + f64::EPSILON], &[1.0, 2.0]);
        assert_eq!(attractor_cloud(&p).len(), 2);
    }

    #[test]
    fn csv_round_trip() {
        let pool = small_l63(2);
        let dir = std::env::temp_dir().join(format!("geochaos-pool-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("pool.csv");
        export_pool(&pool, &path).unwrap();
        let back = import_pool(&path).unwrap();
        assert_eq!(back, pool);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("x,y,z,xp,yp,zp\n"));
        std::fs::remove_dir_all(&dir).ok();
    }
}
