//! End-to-end: generate pools, train emulators, evaluate them.

use geochaos::dataset::{attractor_cloud, export_pool, generate_pool, import_pool, sample_pairs, PoolSpec, RegionFilter};
use geochaos::dynamics::{iterate, HenonMap, L63Map};
use geochaos::ftle::{truth_baseline, CompareSpec};
use geochaos::spatial::PointIndex;
use geochaos::training::{rms_error, sweep, train_with_validation, validation_seed, write_sweep_csv, ArchSpec, SweepFtle, SweepSpec, TrainConfig};
use geochaos::Activation;

fn small(spec: PoolSpec, n_traj: usize) -> PoolSpec {
    PoolSpec { n_traj, ..spec }
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    for (rank, &i) in idx.iter().enumerate() {
        r[i] = rank as f64;
    }
    r
}

fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let d2: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - y).powi(2)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

#[test]
fn default_l63_pool_has_half_a_million_pairs() {
    assert_eq!(PoolSpec::l63().pool_size(), 500_000);
    let pool = generate_pool(&L63Map::default(), &small(PoolSpec::l63(), 3), 0).unwrap();
    assert_eq!(pool.pairs.len(), 1500);
}

#[test]
fn pool_file_round_trip() {
    let pool = generate_pool(&HenonMap::default(), &small(PoolSpec::henon(), 4), 3).unwrap();
    let path = std::env::temp_dir().join(format!("geochaos-pool-{}.csv", std::process::id()));
    export_pool(&pool, &path).unwrap();
    let back = import_pool(&path).unwrap();
    assert_eq!(back.pairs, pool.pairs);
    assert_eq!(back.seed, 3);
    assert_eq!(back.spec, pool.spec);
}

#[test]
fn henon_two_neuron_emulator_tracks_the_attractor() {
    let map = HenonMap::default();
    let pool = generate_pool(&map, &small(PoolSpec::henon(), 100), 0).unwrap();
    let cloud = attractor_cloud(&pool.pairs);
    let index = PointIndex::build_flat(2, cloud.as_flat());
    let data = sample_pairs(&pool.pairs, 20, &RegionFilter::none(), 1).unwrap();
    let val = sample_pairs(&pool.pairs, 1000, &RegionFilter::none(), validation_seed(1)).unwrap();
    let cfg = TrainConfig { seed: 1, ..Default::default() };
    let (net, report) = train_with_validation(&ArchSpec::single(2, 2, Activation::Tanh), &data, Some(&val), &cfg).unwrap();
    assert_eq!(report.param_count, 12);
    let orbit = iterate(&net, cloud.point(0), 5000, 1e6).unwrap();
    let mean = orbit.points().map(|p| index.nearest(p).1).sum::<f64>() / orbit.len() as f64;
    assert!(mean < 0.05, "mean nearest-neighbour distance {mean}");
}

#[test]
fn l63_four_neuron_emulator_generalizes() {
    let pool = generate_pool(&L63Map::default(), &small(PoolSpec::l63(), 100), 0).unwrap();
    let data = sample_pairs(&pool.pairs, 40, &RegionFilter::none(), 0).unwrap();
    let val = sample_pairs(&pool.pairs, 1000, &RegionFilter::none(), validation_seed(0)).unwrap();
    let test = sample_pairs(&pool.pairs, 2000, &RegionFilter::none(), 99).unwrap();
    let (net, report) =
        train_with_validation(&ArchSpec::single(3, 4, Activation::Tanh), &data, Some(&val), &TrainConfig::default()).unwrap();
    let rms = rms_error(&net, &test);
    assert!(rms < 0.1, "test rms {rms}");
    assert!(report.gamma > 0.0 && report.gamma <= report.param_count as f64);
}

#[test]
fn error_falls_with_width_at_150_points() {
    let pool = generate_pool(&L63Map::default(), &small(PoolSpec::l63(), 100), 0).unwrap();
    let test = sample_pairs(&pool.pairs, 2000, &RegionFilter::none(), 99).unwrap();
    let spec = SweepSpec {
        neurons: (3..=8).collect(),
        n_data: vec![150],
        activations: vec![Activation::Tanh],
        seeds: vec![0],
        train: TrainConfig::default(),
        filter: RegionFilter::none(),
        n_validation: 1000,
    };
    let cells = sweep(&pool.pairs, &test, &spec, None);
    assert_eq!(cells.len(), 6);
    let widths: Vec<f64> = cells.iter().map(|c| c.neurons as f64).collect();
    let rms: Vec<f64> = cells.iter().map(|c| c.rms.unwrap()).collect();
    let rho = spearman(&widths, &rms);
    assert!(rho < -0.5, "spearman {rho}, rms {rms:?}");
}

#[test]
fn single_cell_sweep_with_ftle() {
    let map = HenonMap::default();
    let pool = generate_pool(&map, &small(PoolSpec::henon(), 20), 0).unwrap();
    let test = sample_pairs(&pool.pairs, 500, &RegionFilter::none(), 5).unwrap();
    let spec = CompareSpec {
        n_pairs: 40,
        horizons: vec![10],
        dt: 1.0,
        ..CompareSpec::default()
    };
    let baseline = truth_baseline(&map, &attractor_cloud(&pool.pairs), &spec).unwrap();
    let ftle = SweepFtle {
        baseline: &baseline,
        cloud: small(PoolSpec::henon(), 20),
        cloud_seed: 1,
    };
    let sweep_spec = SweepSpec {
        neurons: vec![2],
        n_data: vec![20],
        activations: vec![Activation::Tanh],
        seeds: vec![0],
        train: TrainConfig { epochs: 300, restarts: 2, ..Default::default() },
        filter: RegionFilter::none(),
        n_validation: 200,
    };
    let cells = sweep(&pool.pairs, &test, &sweep_spec, Some(&ftle));
    assert_eq!(cells.len(), 1);
    let c = &cells[0];
    assert!(c.error.is_none(), "{:?}", c.error);
    assert!(c.rms.unwrap() < 0.05);
    assert!(c.ftle_rms.unwrap().is_finite());

    let path = std::env::temp_dir().join(format!("geochaos-sweep-{}.csv", std::process::id()));
    write_sweep_csv(&cells, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "neurons,n_data,activation,seed,rms,ftle_rms");
    assert!(lines[1].starts_with("2,20,tanh,0,"));
}
