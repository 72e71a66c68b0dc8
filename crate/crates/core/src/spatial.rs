//! Nearest-neighbour queries over point clouds.

use kiddo::immutable::float::kdtree::ImmutableKdTree;
use kiddo::SquaredEuclidean;

enum Tree {
    D2(ImmutableKdTree<f64, u64, 2, 32>),
    D3(ImmutableKdTree<f64, u64, 3, 32>),
    Scan(Vec<Vec<f64>>),
}

/// Static spatial index; `nearest` returns the index into the source slice
/// and the Euclidean distance.
pub struct PointIndex {
    tree: Tree,
    len: usize,
}

impl PointIndex {
    pub fn build<P: AsRef<[f64]>>(points: &[P]) -> Self {
        let len = points.len();
        assert!(len > 0, "cannot index an empty cloud");
        let dim = points[0].as_ref().len();
        let tree = match dim {
            2 => {
                let pts: Vec<[f64; 2]> = points
                    .iter()
                    .map(|p| [p.as_ref()[0], p.as_ref()[1]])
                    .collect();
                Tree::D2(ImmutableKdTree::new_from_slice(&pts))
            }
            3 => {
                let pts: Vec<[f64; 3]> = points
                    .iter()
                    .map(|p| {
                        let p = p.as_ref();
                        [p[0], p[1], p[2]]
                    })
                    .collect();
                Tree::D3(ImmutableKdTree::new_from_slice(&pts))
            }
            _ => Tree::Scan(points.iter().map(|p| p.as_ref().to_vec()).collect()),
        };
        Self { tree, len }
    }

    /// Indexes a flat buffer of `dim`-dimensional points.
    pub fn build_flat(dim: usize, data: &[f64]) -> Self {
        let pts: Vec<&[f64]> = data.chunks_exact(dim).collect();
        Self::build(&pts)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn nearest(&self, q: &[f64]) -> (usize, f64) {
        match &self.tree {
            Tree::D2(t) => {
                let nn = t.nearest_one::<SquaredEuclidean>(&[q[0], q[1]]);
                (nn.item as usize, nn.distance.sqrt())
            }
            Tree::D3(t) => {
                let nn = t.nearest_one::<SquaredEuclidean>(&[q[0], q[1], q[2]]);
                (nn.item as usize, nn.distance.sqrt())
            }
            Tree::Scan(pts) => brute_force_nearest(pts, q),
        }
    }
}

pub fn brute_force_nearest<P: AsRef<[f64]>>(points: &[P], q: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, p) in points.iter().enumerate() {
        let d2: f64 = p
            .as_ref()
            .iter()
            .zip(q)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        if d2 < best.1 {
            best = (i, d2);
        }
    }
    (best.0, best.1.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn tree_agrees_with_scan() {
        let mut rng = crate::rng::substream(9, 0);
        for dim in [2usize, 3, 4] {
            let cloud: Vec<Vec<f64>> = (0..500)
                .map(|_| (0..dim).map(|_| rng.random_range(-10.0..10.0)).collect())
                .collect();
            let index = PointIndex::build(&cloud);
            for _ in 0..200 {
                let q: Vec<f64> = (0..dim).map(|_| rng.random_range(-12.0..12.0)).collect();
                let (_, d) = index.nearest(&q);
                let (_, e) = brute_force_nearest(&cloud, &q);
                assert!((d - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn duplicate_points_are_fine() {
        let cloud = vec![[1.0, 1.0, 1.0]; 200];
        let index = PointIndex::build(&cloud);
        assert_eq!(index.nearest(&[1.0, 1.0, 2.0]).1, 1.0);
    }
}
