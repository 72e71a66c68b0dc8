//! Maximum finite-time Lyapunov exponents and truth-vs-emulator comparison.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::PointCloud;
use crate::dynamics::{advance, DifferentiableMap, DiscreteMap, DEFAULT_DIVERGENCE_GUARD};
use crate::error::FtleError;
use crate::rng::{streams, substream};
use crate::spatial::PointIndex;

pub const DEFAULT_EPS: f64 = 1e-9;

/// `N_t`-step Jacobian of `map` at `x0` by central differences along each axis.
pub fn fd_jacobian<M: DiscreteMap + ?Sized>(
    map: &M,
    x0: &[f64],
    n_steps: usize,
    eps: f64,
) -> Result<DMatrix<f64>, FtleError> {
    let n = map.dim();
    if x0.len() != n {
        return Err(FtleError::Invalid(format!("start has {} coordinates, map has {n}", x0.len())));
    }
    if !(eps > 0.0) || n_steps == 0 {
        return Err(FtleError::Invalid("need eps > 0 and n_steps >= 1".into()));
    }
    let mut jac = DMatrix::zeros(n, n);
    let mut probe = x0.to_vec();
    for i in 0..n {
        probe[i] = x0[i] + eps;
        let plus = advance(map, &probe, n_steps, DEFAULT_DIVERGENCE_GUARD)?;
        probe[i] = x0[i] - eps;
        let minus = advance(map, &probe, n_steps, DEFAULT_DIVERGENCE_GUARD)?;
        probe[i] = x0[i];
        for r in 0..n {
            jac[(r, i)] = (plus[r] - minus[r]) / (2.0 * eps);
        }
    }
    Ok(jac)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FtleRecord {
    pub start: Vec<f64>,
    pub n_steps: usize,
    pub dt: f64,
    /// Per unit time: `ln(sqrt(sigma_max)) / (n_steps * dt)`.
    pub lambda_max: f64,
    /// Per map step: `ln(sqrt(sigma_max)) / n_steps`.
    pub lambda_per_step: f64,
    /// Largest eigenvalue of `JᵀJ`.
    pub sigma_max: f64,
}

impl FtleRecord {
    fn from_log_growth(start: &[f64], n_steps: usize, dt: f64, log_sqrt_sigma: f64) -> Self {
        Self {
            start: start.to_vec(),
            n_steps,
            dt,
            lambda_max: log_sqrt_sigma / (n_steps as f64 * dt),
            lambda_per_step: log_sqrt_sigma / n_steps as f64,
            sigma_max: (2.0 * log_sqrt_sigma).exp(),
        }
    }
}

/// Largest eigenvalue of `JᵀJ`.
pub fn sigma_max(jac: &DMatrix<f64>) -> f64 {
    jac.tr_mul(jac)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

pub fn ftle_from_jacobian(start: &[f64], jac: &DMatrix<f64>, n_steps: usize, dt: f64) -> FtleRecord {
    let s = sigma_max(jac);
    let mut rec = FtleRecord::from_log_growth(start, n_steps, dt, 0.5 * s.ln());
    rec.sigma_max = s;
    rec
}

pub fn max_ftle<M: DiscreteMap + ?Sized>(
    map: &M,
    x0: &[f64],
    n_steps: usize,
    dt: f64,
) -> Result<FtleRecord, FtleError> {
    max_ftle_eps(map, x0, n_steps, dt, DEFAULT_EPS)
}

pub fn max_ftle_eps<M: DiscreteMap + ?Sized>(
    map: &M,
    x0: &[f64],
    n_steps: usize,
    dt: f64,
    eps: f64,
) -> Result<FtleRecord, FtleError> {
    if !(dt > 0.0) {
        return Err(FtleError::Invalid("dt must be > 0".into()));
    }
    let jac = fd_jacobian(map, x0, n_steps, eps)?;
    Ok(ftle_from_jacobian(x0, &jac, n_steps, dt))
}

/// FTLE from the product of analytic one-step Jacobians, rescaled as it
/// accumulates so horizons far beyond the finite-difference range stay finite.
/// `sigma_max` in the record overflows to infinity for such horizons; the
/// exponents do not.
pub fn max_ftle_tangent<M: DifferentiableMap + ?Sized>(
    map: &M,
    x0: &[f64],
    n_steps: usize,
    dt: f64,
) -> Result<FtleRecord, FtleError> {
    let n = map.dim();
    if x0.len() != n || n_steps == 0 || !(dt > 0.0) {
        return Err(FtleError::Invalid("need matching start, n_steps >= 1, dt > 0".into()));
    }
    let mut product = DMatrix::<f64>::identity(n, n);
    let mut log_scale = 0.0;
    let mut cur = x0.to_vec();
    let mut next = vec![0.0; n];
    for step in 1..=n_steps {
        product = map.step_jacobian(&cur) * product;
        let norm = product.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(FtleError::Invalid(format!("degenerate tangent product at step {step}")));
        }
        product /= norm;
        log_scale += norm.ln();
        map.apply_into(&cur, &mut next);
        if next.iter().any(|v| !v.is_finite() || v.abs() > DEFAULT_DIVERGENCE_GUARD) {
            return Err(crate::error::DynamicsError::Diverged { step }.into());
        }
        std::mem::swap(&mut cur, &mut next);
    }
    let log_sqrt_sigma = log_scale + 0.5 * sigma_max(&product).ln();
    Ok(FtleRecord::from_log_growth(x0, n_steps, dt, log_sqrt_sigma))
}

/// A start on cloud A matched with its nearest point on cloud B.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointPair {
    pub a_index: usize,
    pub b_index: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub distance: f64,
}

/// Draws `n` distinct points of `a` and matches each to its nearest point in `b`.
pub fn pair_points(a: &PointCloud, b: &PointCloud, n: usize, seed: u64) -> Result<Vec<PointPair>, FtleError> {
    if a.is_empty() || b.is_empty() {
        return Err(FtleError::Invalid("point clouds must be non-empty".into()));
    }
    if a.dim() != b.dim() {
        return Err(FtleError::Invalid("point clouds differ in dimension".into()));
    }
    if n > a.len() {
        return Err(FtleError::Invalid(format!("{n} pairs requested from {} points", a.len())));
    }
    let index = PointIndex::build_flat(b.dim(), b.as_flat());
    let mut rng = substream(seed, streams::PAIRING);
    let mut picks = sample(&mut rng, a.len(), n).into_vec();
    picks.sort_unstable();
    Ok(picks
        .into_iter()
        .map(|ai| {
            let (bi, distance) = index.nearest(a.point(ai));
            PointPair {
                a_index: ai,
                b_index: bi,
                a: a.point(ai).to_vec(),
                b: b.point(bi).to_vec(),
                distance,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedFtle {
    pub truth: FtleRecord,
    pub emulator: FtleRecord,
    pub start_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonResult {
    pub n_steps: usize,
    pub pairs: Vec<PairedFtle>,
    /// RMS of `lambda_emulator - lambda_truth` over the surviving pairs.
    pub rms: f64,
    /// Pairs dropped because a probe trajectory diverged.
    pub dropped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareSpec {
    pub n_pairs: usize,
    pub horizons: Vec<usize>,
    pub dt: f64,
    pub eps: f64,
    pub seed: u64,
}

impl Default for CompareSpec {
    fn default() -> Self {
        Self {
            n_pairs: 2000,
            horizons: vec![50],
            dt: 0.01,
            eps: DEFAULT_EPS,
            seed: 0,
        }
    }
}

/// Truth-side FTLE at a fixed sample of start points, reusable across emulators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthBaseline {
    pub starts: Vec<Vec<f64>>,
    /// `records[h][i]`: horizon `h`, start `i`; `None` where a probe diverged.
    pub records: Vec<Vec<Option<FtleRecord>>>,
    pub spec: CompareSpec,
}

pub fn truth_baseline<T: DiscreteMap + ?Sized>(
    truth: &T,
    truth_cloud: &PointCloud,
    spec: &CompareSpec,
) -> Result<TruthBaseline, FtleError> {
    if spec.n_pairs > truth_cloud.len() || truth_cloud.is_empty() {
        return Err(FtleError::Invalid(format!(
            "{} starts requested from {} points",
            spec.n_pairs,
            truth_cloud.len()
        )));
    }
    let mut rng = substream(spec.seed, streams::PAIRING);
    let mut picks = sample(&mut rng, truth_cloud.len(), spec.n_pairs).into_vec();
    picks.sort_unstable();
    let starts: Vec<Vec<f64>> = picks.iter().map(|&i| truth_cloud.point(i).to_vec()).collect();
    let mut records = Vec::with_capacity(spec.horizons.len());
    for &nt in &spec.horizons {
        let row = starts
            .par_iter()
            .map(|x| settle(max_ftle_eps(truth, x, nt, spec.dt, spec.eps)))
            .collect();
        records.push(row);
    }
    Ok(TruthBaseline {
        starts,
        records,
        spec: spec.clone(),
    })
}

fn settle(r: Result<FtleRecord, FtleError>) -> Option<FtleRecord> {
    match r {
        Ok(rec) => Some(rec),
        Err(FtleError::Diverged(_)) => None,
        Err(FtleError::Invalid(m)) => panic!("validated FTLE request rejected: {m}"),
    }
}

/// Matches every baseline start to its nearest emulator-cloud point and
/// compares the emulator FTLE there with the truth.
pub fn compare_with_baseline<E: DiscreteMap + ?Sized>(
    baseline: &TruthBaseline,
    emulator: &E,
    emulator_cloud: &PointCloud,
) -> Result<Vec<HorizonResult>, FtleError> {
    if emulator_cloud.is_empty() {
        return Err(FtleError::Invalid("emulator cloud is empty".into()));
    }
    if baseline.starts.first().is_some_and(|s| s.len() != emulator_cloud.dim()) {
        return Err(FtleError::Invalid("point clouds differ in dimension".into()));
    }
    let spec = &baseline.spec;
    let index = PointIndex::build_flat(emulator_cloud.dim(), emulator_cloud.as_flat());
    let matches: Vec<(usize, f64)> = baseline.starts.iter().map(|s| index.nearest(s)).collect();
    let mut out = Vec::with_capacity(spec.horizons.len());
    for (h, &nt) in spec.horizons.iter().enumerate() {
        let results: Vec<Option<PairedFtle>> = matches
            .par_iter()
            .zip(&baseline.records[h])
            .map(|(&(bi, distance), truth)| {
                let truth = truth.clone()?;
                let emulator = settle(max_ftle_eps(emulator, emulator_cloud.point(bi), nt, spec.dt, spec.eps))?;
                Some(PairedFtle {
                    truth,
                    emulator,
                    start_distance: distance,
                })
            })
            .collect();
        let dropped = results.iter().filter(|r| r.is_none()).count();
        let kept: Vec<PairedFtle> = results.into_iter().flatten().collect();
        let rms = if kept.is_empty() {
            f64::NAN
        } else {
            (kept
                .iter()
                .map(|p| (p.emulator.lambda_max - p.truth.lambda_max).powi(2))
                .sum::<f64>()
                / kept.len() as f64)
                .sqrt()
        };
        out.push(HorizonResult {
            n_steps: nt,
            pairs: kept,
            rms,
            dropped,
        });
    }
    Ok(out)
}

/// Pairs starts on the truth cloud with the emulator cloud and compares the
/// FTLE of both systems at every horizon.
pub fn ftle_compare<T, E>(
    truth: &T,
    emulator: &E,
    truth_cloud: &PointCloud,
    emulator_cloud: &PointCloud,
    spec: &CompareSpec,
) -> Result<Vec<HorizonResult>, FtleError>
where
    T: DiscreteMap + ?Sized,
    E: DiscreteMap + ?Sized,
{
    if truth_cloud.dim() != emulator_cloud.dim() {
        return Err(FtleError::Invalid("point clouds differ in dimension".into()));
    }
    let baseline = truth_baseline(truth, truth_cloud, spec)?;
    compare_with_baseline(&baseline, emulator, emulator_cloud)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonSummary {
    pub n_steps: usize,
    pub rms: f64,
    pub n_pairs: usize,
    pub dropped: usize,
}

pub fn summarize(results: &[HorizonResult]) -> Vec<HorizonSummary> {
    results
        .iter()
        .map(|r| HorizonSummary {
            n_steps: r.n_steps,
            rms: r.rms,
            n_pairs: r.pairs.len(),
            dropped: r.dropped,
        })
        .collect()
}

const AXIS_NAMES: [&str; 3] = ["x", "y", "z"];

/// Scatter CSV with one row per surviving pair and horizon.
pub fn write_scatter_csv(results: &[HorizonResult], path: &Path) -> std::io::Result<()> {
    let dim = results
        .iter()
        .find_map(|r| r.pairs.first())
        .map_or(3, |p| p.truth.start.len());
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    let mut header: Vec<String> = (0..dim)
        .map(|i| format!("x0{}", AXIS_NAMES.get(i).copied().unwrap_or("w")))
        .collect();
    header.extend(["lambda_truth", "lambda_nn", "Nt"].map(String::from));
    writeln!(f, "{}", header.join(","))?;
    for r in results {
        for p in &r.pairs {
            for v in &p.truth.start {
                write!(f, "{v},")?;
            }
            writeln!(f, "{},{},{}", p.truth.lambda_max, p.emulator.lambda_max, r.n_steps)?;
        }
    }
    f.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{attractor_cloud, generate_pool, PoolSpec};
    use crate::dynamics::{HenonMap, L63Map, LinearMap};
    use crate::spatial::brute_force_nearest;
    use rand::Rng;

    fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn identity_map_jacobian() {
        let j = fd_jacobian(&LinearMap::identity(3), &[1.0, -2.0, 0.5], 17, DEFAULT_EPS).unwrap();
        assert!(rel_err(&j, &DMatrix::identity(3, 3)) < 1e-6);
    }

    #[test]
    fn linear_map_power() {
        let a = DMatrix::from_row_slice(2, 2, &[1.1, 0.3, -0.2, 0.7]);
        let j = fd_jacobian(&LinearMap::new(a.clone()), &[0.3, 0.4], 6, DEFAULT_EPS).unwrap();
        assert!(rel_err(&j, &a.pow(6)) < 1e-6);
    }

    #[test]
    fn henon_chain_product() {
        let map = HenonMap::default();
        let mut x = vec![0.1, 0.05];
        let x0 = x.clone();
        let mut chain = DMatrix::<f64>::identity(2, 2);
        for _ in 0..5 {
            chain = map.step_jacobian(&x) * chain;
            x = map.apply(&x);
        }
        let j = fd_jacobian(&map, &x0, 5, DEFAULT_EPS).unwrap();
        assert!(rel_err(&j, &chain) < 1e-4);
    }

    #[test]
    fn doubling_map() {
        let map = LinearMap::new(DMatrix::from_diagonal_element(2, 2, 2.0));
        for nt in [1, 4, 20] {
            let r = max_ftle(&map, &[0.2, -0.1], nt, 1.0).unwrap();
            assert!((r.lambda_max - 2f64.ln()).abs() < 1e-6);
        }
    }

    fn expm(a: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
        // exp(tA) through a scaled Taylor series
        let k = 12;
        let m = a * (t / 2f64.powi(k));
        let mut term = DMatrix::<f64>::identity(3, 3);
        let mut sum = term.clone();
        for i in 1..20 {
            term = &term * &m / i as f64;
            sum += &term;
        }
        for _ in 0..k {
            sum = &sum * &sum;
        }
        sum
    }

    #[test]
    fn l63_origin_matches_linearization() {
        // at the fixed point the N_t-step Jacobian is exp(N_t dt A)
        let a = DMatrix::from_row_slice(3, 3, &[-10.0, 10.0, 0.0, 28.0, -1.0, 0.0, 0.0, 0.0, -8.0 / 3.0]);
        for nt in [5, 50] {
            let oracle = expm(&a, nt as f64 * 0.01);
            let expected = 0.5 * sigma_max(&oracle).ln() / (nt as f64 * 0.01);
            let r = max_ftle(&L63Map::default(), &[0.0, 0.0, 0.0], nt, 0.01).unwrap();
            assert!((r.lambda_max - expected).abs() < 0.05, "{} vs {}", r.lambda_max, expected);
        }
        // longer horizons approach the leading eigenvalue of the linearization
        let eig = (-11.0 + 1201f64.sqrt()) / 2.0;
        let long = 0.5 * sigma_max(&expm(&a, 5.0)).ln() / 5.0;
        assert!((long - eig).abs() < 0.05);
    }

    #[test]
    fn orthogonal_conjugation_invariance() {
        let a = DMatrix::from_row_slice(3, 3, &[1.2, 0.4, 0.0, -0.3, 0.8, 0.2, 0.1, 0.0, 0.5]);
        let theta = 0.7f64;
        let q = DMatrix::from_row_slice(
            3,
            3,
            &[theta.cos(), -theta.sin(), 0.0, theta.sin(), theta.cos(), 0.0, 0.0, 0.0, 1.0],
        );
        let conj = &q * &a * q.transpose();
        let jl = a.pow(8);
        let jc = conj.pow(8);
        let la = ftle_from_jacobian(&[0.0; 3], &jl, 8, 1.0).lambda_max;
        let lc = ftle_from_jacobian(&[0.0; 3], &jc, 8, 1.0).lambda_max;
        assert!((la - lc).abs() < 1e-8);
    }

    #[test]
    fn eigen_solver_matches_svd_and_cubic() {
        let mut rng = substream(3, 0);
        for _ in 0..20 {
            let j = DMatrix::<f64>::from_fn(3, 3, |_, _| rng.random_range(-3.0..3.0));
            let s = sigma_max(&j);
            let svd_top = j.clone().svd(false, false).singular_values.max();
            assert!((s - svd_top * svd_top).abs() / s < 1e-8);

            // closed-form (trigonometric) roots of the characteristic cubic
            let m = j.tr_mul(&j);
            let p1 = m[(0, 1)].powi(2) + m[(0, 2)].powi(2) + m[(1, 2)].powi(2);
            let q = m.trace() / 3.0;
            let p2 = (m[(0, 0)] - q).powi(2) + (m[(1, 1)] - q).powi(2) + (m[(2, 2)] - q).powi(2) + 2.0 * p1;
            let p = (p2 / 6.0).sqrt();
            let b = (&m - DMatrix::<f64>::identity(3, 3) * q) / p;
            let r = (b.determinant() / 2.0).clamp(-1.0, 1.0);
            let top = q + 2.0 * p * (r.acos() / 3.0).cos();
            assert!((s - top).abs() / s < 1e-8);
        }
    }

    fn l63_attractor_point() -> Vec<f64> {
        advance(&L63Map::default(), &[1.0, 1.0, 20.0], 2000, 1e6).unwrap()
    }

    #[test]
    fn eps_robustness() {
        let x0 = l63_attractor_point();
        let map = L63Map::default();
        let a = max_ftle_eps(&map, &x0, 50, 0.01, 1e-9).unwrap();
        let b = max_ftle_eps(&map, &x0, 50, 0.01, 2e-9).unwrap();
        assert!((a.lambda_max - b.lambda_max).abs() < 1e-3);
        assert!((a.lambda_max / a.lambda_per_step - 100.0).abs() < 1e-9);
    }

    /// Benettin's method: Gram-Schmidt re-orthonormalization of a tangent basis.
    fn qr_lyapunov(map: &HenonMap, x0: &[f64], n: usize) -> f64 {
        let mut q = DMatrix::<f64>::identity(2, 2);
        let mut x = x0.to_vec();
        let mut sum = 0.0;
        for _ in 0..n {
            let m = map.step_jacobian(&x) * &q;
            let qr = m.qr();
            let r = qr.r();
            sum += r[(0, 0)].abs().ln();
            q = qr.q();
            x = map.apply(&x);
        }
        sum / n as f64
    }

    #[test]
    fn henon_long_run_exponent() {
        let map = HenonMap::default();
        let mut rng = substream(11, 0);
        let starts: Vec<Vec<f64>> = (0..100)
            .map(|_| {
                let s = [rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2)];
                advance(&map, &s, 500, 1e6).unwrap()
            })
            .collect();
        let (mut ours, mut oracle) = (0.0, 0.0);
        for s in &starts {
            ours += max_ftle_tangent(&map, s, 10_000, 1.0).unwrap().lambda_max;
            oracle += qr_lyapunov(&map, s, 10_000);
        }
        ours /= 100.0;
        oracle /= 100.0;
        assert!((ours - 0.419).abs() < 0.01, "{ours}");
        assert!((oracle - 0.419).abs() < 0.01, "{oracle}");
        assert!((ours - oracle).abs() < 1e-3);
    }

    #[test]
    fn tangent_and_fd_agree() {
        let map = HenonMap::default();
        let x0 = advance(&map, &[0.1, 0.1], 300, 1e6).unwrap();
        let a = max_ftle(&map, &x0, 20, 1.0).unwrap();
        let b = max_ftle_tangent(&map, &x0, 20, 1.0).unwrap();
        assert!((a.lambda_max - b.lambda_max).abs() < 1e-6);
        assert!((a.sigma_max - b.sigma_max).abs() / a.sigma_max < 1e-5);
    }

    fn random_cloud(n: usize, seed: u64) -> PointCloud {
        let mut rng = substream(seed, 0);
        PointCloud::from_flat(3, (0..3 * n).map(|_| rng.random_range(-1.0..1.0)).collect())
    }

    #[test]
    fn pairing_examples() {
        let a = random_cloud(100, 1);
        for p in pair_points(&a, &a, 40, 2).unwrap() {
            assert_eq!(p.distance, 0.0);
        }
        let single = PointCloud::from_flat(3, vec![0.5, 0.5, 0.5]);
        assert!(pair_points(&a, &single, 30, 2).unwrap().iter().all(|p| p.b_index == 0));

        let b = random_cloud(100, 3);
        let b_points: Vec<&[f64]> = b.points().collect();
        for p in pair_points(&a, &b, 100, 4).unwrap() {
            let (bi, d) = brute_force_nearest(&b_points, &p.a);
            assert_eq!(bi, p.b_index);
            assert!((d - p.distance).abs() < 1e-12);
        }
        assert!(pair_points(&a, &b, 101, 0).is_err());
    }

    #[test]
    fn self_comparison_is_exact() {
        let map = HenonMap::default();
        let pool = generate_pool(
            &map,
            &PoolSpec {
                n_traj: 10,
                n_steps: 300,
                n_discard: 200,
                ..PoolSpec::henon()
            },
            0,
        )
        .unwrap();
        let cloud = attractor_cloud(&pool.pairs);
        let spec = CompareSpec {
            n_pairs: 50,
            horizons: vec![5, 20],
            dt: 1.0,
            ..Default::default()
        };
        let res = ftle_compare(&map, &map, &cloud, &cloud, &spec).unwrap();
        for r in &res {
            assert_eq!(r.rms, 0.0);
            assert_eq!(r.dropped, 0);
            assert_eq!(r.pairs.len(), 50);
        }
        let dir = std::env::temp_dir().join("geochaos_ftle_csv");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("scatter.csv");
        write_scatter_csv(&res, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("x0x,x0y,lambda_truth,lambda_nn,Nt\n"));
        assert_eq!(text.lines().count(), 101);
    }
}
