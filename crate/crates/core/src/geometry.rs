//! Stretch, rotation and compression structure of the neuron map.
//!
//! With `W* = U S Vᵀ` one neuron-map step factors as rotate by `Vᵀ`, stretch
//! by `S`, rotate by `U`, then squash with `g(· + b*)`.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, NetworkError};
use crate::network::Mlp;
use crate::plot::{Plot, Series};

impl From<NetworkError> for GeometryError {
    fn from(e: NetworkError) -> Self {
        GeometryError::Unsupported(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvdTriple {
    pub u: DMatrix<f64>,
    /// Descending.
    pub s: DVector<f64>,
    pub v: DMatrix<f64>,
}

impl SvdTriple {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.u * DMatrix::from_diagonal(&self.s) * self.v.transpose()
    }

    /// The same factorization with every column pair of `U`, `V` negated.
    pub fn complementary(&self) -> Self {
        Self {
            u: -&self.u,
            s: self.s.clone(),
            v: -&self.v,
        }
    }
}

/// SVD with a fixed sign convention: each column of `V` has its
/// largest-magnitude entry positive, after which the pair belonging to the
/// largest singular value is negated if needed to make `det V = +1`.
pub fn svd(m: &DMatrix<f64>) -> SvdTriple {
    let n = m.nrows();
    assert!(m.is_square(), "square matrix expected");
    let dec = m.clone().svd(true, true);
    let u0 = dec.u.expect("requested U");
    let vt0 = dec.v_t.expect("requested Vᵀ");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| dec.singular_values[b].total_cmp(&dec.singular_values[a]));

    let mut u = DMatrix::zeros(n, n);
    let mut v = DMatrix::zeros(n, n);
    let mut s = DVector::zeros(n);
    for (k, &i) in order.iter().enumerate() {
        s[k] = dec.singular_values[i];
        let mut uc = u0.column(i).into_owned();
        let mut vc = vt0.row(i).transpose();
        let lead = vc.iter().copied().fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        if lead < 0.0 {
            uc = -uc;
            vc = -vc;
        }
        u.set_column(k, &uc);
        v.set_column(k, &vc);
    }
    if v.determinant() < 0.0 {
        let uc = -u.column(0).into_owned();
        let vc = -v.column(0).into_owned();
        u.set_column(0, &uc);
        v.set_column(0, &vc);
    }
    SvdTriple { u, s, v }
}

pub fn svd_wstar(net: &Mlp) -> Result<SvdTriple, GeometryError> {
    Ok(svd(&net.effective_pair()?.wstar))
}

/// Singular values strictly above `threshold`.
pub fn stretch_count(s: &DVector<f64>, threshold: f64) -> usize {
    s.iter().filter(|&&v| v > threshold).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrthoKind {
    Rotation,
    Reflection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrthoClassification {
    pub kind: OrthoKind,
    /// Counter-clockwise rotation angle in [0, 360), or the reflection axis
    /// angle to the first axis in [0, 180).
    pub angle_degrees: f64,
    /// The angle after negating the matrix (+180° rotation, +90° axis).
    pub complementary_degrees: f64,
    pub determinant: f64,
}

fn orthogonality_defect(q: &DMatrix<f64>) -> f64 {
    let n = q.nrows();
    (q.transpose() * q - DMatrix::<f64>::identity(n, n)).amax()
}

pub fn classify_orthogonal_2d(q: &DMatrix<f64>) -> Result<OrthoClassification, GeometryError> {
    if q.shape() != (2, 2) {
        return Err(GeometryError::Shape {
            expected: 2,
            rows: q.nrows(),
            cols: q.ncols(),
        });
    }
    let defect = orthogonality_defect(q);
    if defect > 1e-8 {
        return Err(GeometryError::NotOrthogonal(defect));
    }
    let det = q.determinant();
    let theta = q[(1, 0)].atan2(q[(0, 0)]).to_degrees();
    Ok(if det > 0.0 {
        let a = theta.rem_euclid(360.0);
        OrthoClassification {
            kind: OrthoKind::Rotation,
            angle_degrees: a,
            complementary_degrees: (a + 180.0).rem_euclid(360.0),
            determinant: det,
        }
    } else {
        let a = (0.5 * theta).rem_euclid(180.0);
        OrthoClassification {
            kind: OrthoKind::Reflection,
            angle_degrees: a,
            complementary_degrees: (a + 90.0).rem_euclid(180.0),
            determinant: det,
        }
    })
}

/// Principal angles of an orthogonal matrix of any size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthoDecomposition {
    pub determinant: f64,
    /// One angle in (0°, 180°) per complex-conjugate eigenvalue pair.
    pub rotation_degrees: Vec<f64>,
    /// Count of eigenvalues at +1 and -1.
    pub fixed_axes: usize,
    pub reversed_axes: usize,
}

pub fn classify_orthogonal(q: &DMatrix<f64>) -> Result<OrthoDecomposition, GeometryError> {
    if !q.is_square() {
        return Err(GeometryError::Shape {
            expected: q.nrows(),
            rows: q.nrows(),
            cols: q.ncols(),
        });
    }
    let defect = orthogonality_defect(q);
    if defect > 1e-8 {
        return Err(GeometryError::NotOrthogonal(defect));
    }
    let eig = q.complex_eigenvalues();
    let mut rotation_degrees = Vec::new();
    let (mut fixed_axes, mut reversed_axes) = (0, 0);
    for z in eig.iter() {
        let angle = z.im.atan2(z.re).to_degrees();
        if z.im.abs() < 1e-9 {
            if z.re > 0.0 {
                fixed_axes += 1;
            } else {
                reversed_axes += 1;
            }
        } else if angle > 0.0 {
            rotation_degrees.push(angle);
        }
    }
    rotation_degrees.sort_by(f64::total_cmp);
    Ok(OrthoDecomposition {
        determinant: q.determinant(),
        rotation_degrees,
        fixed_axes,
        reversed_axes,
    })
}

/// The five stages of one neuron-map step applied to a point set:
/// `H0` encoded, `H1 = Vᵀ H0`, `H2 = S H1`, `H3 = U H2`, `H4 = g(H3 + b*)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubstepTrace {
    pub sets: [Vec<DVector<f64>>; 5],
}

pub fn trace_substeps(net: &Mlp, phase_points: &[Vec<f64>]) -> Result<SubstepTrace, GeometryError> {
    let svd = svd_wstar(net)?;
    let bstar = net.effective_pair()?.bstar;
    let vt = svd.v.transpose();
    let act = net.activation();
    let mut sets: [Vec<DVector<f64>>; 5] = Default::default();
    for x in phase_points {
        let h0 = net.neuron_encode(x)?;
        let h1 = &vt * &h0;
        let h2 = h1.component_mul(&svd.s);
        let h3 = &svd.u * &h2;
        let h4 = (&h3 + &bstar).map(|a| act.value(a));
        for (set, h) in sets.iter_mut().zip([h0, h1, h2, h3, h4]) {
            set.push(h);
        }
    }
    Ok(SubstepTrace { sets })
}

pub const SUBSTEP_COLORS: [&str; 5] = ["blue", "red", "gold", "purple", "green"];

impl SubstepTrace {
    pub fn len(&self) -> usize {
        self.sets[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets[0].is_empty()
    }

    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        let dim = self.sets[0].first().map_or(0, |v| v.len());
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        let cols: Vec<String> = (1..=dim).map(|i| format!("y{i}")).collect();
        writeln!(f, "set_id,idx,{}", cols.join(","))?;
        for (sid, set) in self.sets.iter().enumerate() {
            for (idx, y) in set.iter().enumerate() {
                let vals: Vec<String> = y.iter().map(|v| v.to_string()).collect();
                writeln!(f, "{sid},{idx},{}", vals.join(","))?;
            }
        }
        f.flush()
    }

    /// Scatter of the five sets in the first two neuron coordinates.
    pub fn plot(&self, title: &str) -> Plot {
        let mut p = Plot::new(title, "y1", "y2");
        for (k, set) in self.sets.iter().enumerate() {
            let pts = set.iter().map(|y| (y[0], y.get(1).copied().unwrap_or(0.0))).collect();
            p = p.with(Series::dots(format!("H{k}"), SUBSTEP_COLORS[k], pts));
        }
        p
    }
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Counter-clockwise convex hull (Andrew's monotone chain).
pub fn convex_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &(f64, f64)>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Inside or on the boundary of a counter-clockwise convex polygon.
pub fn in_convex_polygon(poly: &[(f64, f64)], p: (f64, f64)) -> bool {
    match poly.len() {
        0 => false,
        1 => poly[0] == p,
        _ => (0..poly.len()).all(|i| cross(poly[i], poly[(i + 1) % poly.len()], p) >= -1e-12),
    }
}

/// `hull` scaled about its vertex centroid by `1 + margin`.
pub fn dilate(hull: &[(f64, f64)], margin: f64) -> Vec<(f64, f64)> {
    let n = hull.len() as f64;
    let c = hull.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0 / n, a.1 + p.1 / n));
    hull.iter()
        .map(|p| (c.0 + (p.0 - c.0) * (1.0 + margin), c.1 + (p.1 - c.1) * (1.0 + margin)))
        .collect()
}

/// Fraction of `inner` inside the convex hull of `outer` dilated by `margin`.
/// Two-dimensional points only.
pub fn hull_occupancy(outer: &[DVector<f64>], inner: &[DVector<f64>], margin: f64) -> Result<f64, GeometryError> {
    let to2 = |v: &DVector<f64>| -> Result<(f64, f64), GeometryError> {
        if v.len() != 2 {
            return Err(GeometryError::Unsupported(format!("hull check needs 2-D points, got {}", v.len())));
        }
        Ok((v[0], v[1]))
    };
    let outer: Vec<(f64, f64)> = outer.iter().map(to2).collect::<Result<_, _>>()?;
    let hull = dilate(&convex_hull(&outer), margin);
    let mut inside = 0;
    for v in inner {
        if in_convex_polygon(&hull, to2(v)?) {
            inside += 1;
        }
    }
    Ok(inside as f64 / inner.len().max(1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompressionReport {
    pub n_samples: usize,
    /// Largest activation slope over samples and neurons.
    pub max_gain: f64,
    pub min_gain: f64,
    /// `max_gain <= 1`.
    pub certified: bool,
}

/// Activation slopes `g'(W1 x + b1)` of the first hidden layer over `samples`.
pub fn compression_certificate(net: &Mlp, samples: &[Vec<f64>]) -> CompressionReport {
    let l1 = &net.layers()[0];
    let act = net.activation();
    let (mut max_gain, mut min_gain) = (f64::NEG_INFINITY, f64::INFINITY);
    for x in samples {
        let pre = &l1.weights * DVector::from_column_slice(x) + &l1.bias;
        for &a in pre.iter() {
            let g = act.derivative(a);
            max_gain = max_gain.max(g);
            min_gain = min_gain.min(g);
        }
    }
    CompressionReport {
        n_samples: samples.len(),
        max_gain,
        min_gain,
        certified: max_gain <= 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{bundled, Activation};
    use crate::rng::substream;
    use proptest::prelude::*;
    use rand::Rng;

    fn rotation(deg: f64) -> DMatrix<f64> {
        let t = deg.to_radians();
        DMatrix::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()])
    }

    fn check_triple(m: &DMatrix<f64>, t: &SvdTriple) {
        let n = m.nrows();
        let id = DMatrix::<f64>::identity(n, n);
        assert!((t.u.transpose() * &t.u - &id).amax() < 1e-10);
        assert!((t.v.transpose() * &t.v - &id).amax() < 1e-10);
        assert!((t.reconstruct() - m).amax() < 1e-10 * m.amax().max(1.0));
        assert!(t.s.as_slice().windows(2).all(|w| w[0] >= w[1]));
        assert!(t.v.determinant() > 0.0);
    }

    #[test]
    fn identity_singular_values() {
        let t = svd(&DMatrix::identity(3, 3));
        assert!(t.s.iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn table1_singular_values() {
        let net = bundled::table1();
        let t = svd_wstar(&net).unwrap();
        for (got, want) in t.s.iter().zip([2.7988, 1.2134, 0.6438, 0.0]) {
            assert!((got - want).abs() < 1e-3, "{got} vs {want}");
        }
        assert!(t.s[3].abs() < 1e-10);
        assert_eq!(stretch_count(&t.s, 1.0), 2);
        check_triple(&net.effective_pair().unwrap().wstar, &t);
    }

    #[test]
    fn stretch_count_examples() {
        assert_eq!(stretch_count(&svd(&(DMatrix::identity(3, 3) * 0.5)).s, 1.0), 0);
        let t2 = svd_wstar(&bundled::table2()).unwrap();
        assert!(stretch_count(&t2.s, 1.0) >= 1);
    }

    #[test]
    fn rank_deficiency_of_four_neuron_nets() {
        let mut rng = substream(2, 0);
        for _ in 0..10 {
            let w: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
            let net = Mlp::single_hidden(3, 4, 3, &w, &[0.0; 4], &w, &[0.0; 3], Activation::Tanh).unwrap();
            assert!(svd_wstar(&net).unwrap().s[3].abs() < 1e-10);
        }
    }

    #[test]
    fn classify_examples() {
        let c = classify_orthogonal_2d(&DMatrix::identity(2, 2)).unwrap();
        assert_eq!(c.kind, OrthoKind::Rotation);
        assert!(c.angle_degrees.abs() < 1e-12);
        let c = classify_orthogonal_2d(&DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])).unwrap();
        assert_eq!(c.kind, OrthoKind::Rotation);
        assert!((c.angle_degrees - 90.0).abs() < 1e-12);
        let refl = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let c = classify_orthogonal_2d(&refl).unwrap();
        assert_eq!(c.kind, OrthoKind::Reflection);
        assert!(c.angle_degrees.abs() < 1e-12);
        assert!(matches!(
            classify_orthogonal_2d(&DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0])),
            Err(GeometryError::NotOrthogonal(_))
        ));
    }

    #[test]
    fn rotation_grid_round_trip() {
        for deg in 0..360 {
            let c = classify_orthogonal_2d(&rotation(deg as f64)).unwrap();
            let err = (c.angle_degrees - deg as f64 + 180.0).rem_euclid(360.0) - 180.0;
            assert!(err.abs() < 1e-9, "{deg}: {}", c.angle_degrees);
        }
    }

    #[test]
    fn reflection_axis_round_trip() {
        for deg in (0..180).step_by(7) {
            let t = (2.0 * deg as f64).to_radians();
            let q = DMatrix::from_row_slice(2, 2, &[t.cos(), t.sin(), t.sin(), -t.cos()]);
            let c = classify_orthogonal_2d(&q).unwrap();
            assert_eq!(c.kind, OrthoKind::Reflection);
            assert!((c.angle_degrees - deg as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn table2_angles() {
        let t = svd_wstar(&bundled::table2()).unwrap();
        let vt = classify_orthogonal_2d(&t.v.transpose()).unwrap();
        let u = classify_orthogonal_2d(&t.u).unwrap();
        assert_eq!(vt.kind, OrthoKind::Rotation);
        assert_eq!(u.kind, OrthoKind::Reflection);
        assert!((vt.angle_degrees - 130.0).abs() < 0.5, "{}", vt.angle_degrees);
        assert!((u.angle_degrees - 69.0).abs() < 0.5, "{}", u.angle_degrees);
        assert!((u.determinant + 1.0).abs() < 1e-10);
        // negating both factors is the other valid branch
        let c = t.complementary();
        let vt2 = classify_orthogonal_2d(&c.v.transpose()).unwrap();
        let u2 = classify_orthogonal_2d(&c.u).unwrap();
        assert!((vt2.angle_degrees - vt.complementary_degrees).abs() < 1e-9);
        assert!((u2.angle_degrees - u.complementary_degrees).abs() < 1e-9);
        assert!((c.reconstruct() - t.reconstruct()).amax() < 1e-12);
    }

    #[test]
    fn higher_dimensional_classification() {
        let t = svd_wstar(&bundled::table1()).unwrap();
        for q in [&t.u, &t.v] {
            let d = classify_orthogonal(q).unwrap();
            assert!((d.determinant.abs() - 1.0).abs() < 1e-10);
            assert_eq!(2 * d.rotation_degrees.len() + d.fixed_axes + d.reversed_axes, 4);
        }
        // block-diagonal rotation by 30° and 100°
        let mut q = DMatrix::zeros(4, 4);
        q.view_mut((0, 0), (2, 2)).copy_from(&rotation(30.0));
        q.view_mut((2, 2), (2, 2)).copy_from(&rotation(100.0));
        let d = classify_orthogonal(&q).unwrap();
        assert_eq!(d.rotation_degrees.len(), 2);
        assert!((d.rotation_degrees[0] - 30.0).abs() < 1e-9);
        assert!((d.rotation_degrees[1] - 100.0).abs() < 1e-9);
    }

    fn henon_net_orbit(n: usize) -> Vec<Vec<f64>> {
        let net = bundled::table2();
        let mut x = vec![0.1, 0.1];
        for _ in 0..500 {
            x = net.forward(&x).as_slice().to_vec();
        }
        (0..n)
            .map(|_| {
                let cur = x.clone();
                x = net.forward(&x).as_slice().to_vec();
                cur
            })
            .collect()
    }

    #[test]
    fn substeps_compose_to_neuron_step() {
        let net = bundled::table2();
        let mut rng = substream(8, 0);
        let pts: Vec<Vec<f64>> = (0..1000)
            .map(|_| vec![rng.random_range(-1.5..1.5), rng.random_range(-0.5..0.5)])
            .collect();
        let tr = trace_substeps(&net, &pts).unwrap();
        assert_eq!(tr.len(), 1000);
        for (h0, h4) in tr.sets[0].iter().zip(&tr.sets[4]) {
            let direct = net.neuron_step(h0).unwrap();
            assert!((h4 - direct).amax() < 1e-12);
            assert!(h4.iter().all(|v| v.abs() <= 1.0));
        }
    }

    #[test]
    fn identity_like_net_leaves_sets_unchanged() {
        let net = Mlp::single_hidden(
            2,
            2,
            2,
            &[1.0, 0.0, 0.0, 1.0],
            &[0.0, 0.0],
            &[1.0, 0.0, 0.0, 1.0],
            &[0.0, 0.0],
            Activation::Linear,
        )
        .unwrap();
        let tr = trace_substeps(&net, &[vec![0.3, -0.2], vec![1.0, 2.0]]).unwrap();
        for set in &tr.sets[1..] {
            for (a, b) in set.iter().zip(&tr.sets[0]) {
                assert!((a - b).amax() < 1e-12);
            }
        }
    }

    #[test]
    fn horseshoe_returns_to_occupied_region() {
        let tr = trace_substeps(&bundled::table2(), &henon_net_orbit(200)).unwrap();
        assert_eq!(hull_occupancy(&tr.sets[0], &tr.sets[4], 0.05).unwrap(), 1.0);
    }

    #[test]
    fn hull_basics() {
        let sq = convex_hull(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.5, 0.5)]);
        assert_eq!(sq.len(), 4);
        assert!(in_convex_polygon(&sq, (0.5, 0.5)));
        assert!(in_convex_polygon(&sq, (1.0, 0.5)));
        assert!(!in_convex_polygon(&sq, (1.01, 0.5)));
        assert!(in_convex_polygon(&dilate(&sq, 0.05), (1.02, 0.5)));
    }

    #[test]
    fn compression_examples() {
        let mut rng = substream(4, 0);
        let samples: Vec<Vec<f64>> = (0..5000)
            .map(|_| vec![rng.random_range(-20.0..20.0), rng.random_range(-25.0..25.0), rng.random_range(0.0..50.0)])
            .collect();
        let r = compression_certificate(&bundled::table1(), &samples);
        assert!(r.certified && r.max_gain < 1.0);
        let lin = Mlp::single_hidden(3, 1, 3, &[1.0, 2.0, 3.0], &[0.5], &[1.0, 1.0, 1.0], &[0.0; 3], Activation::Linear)
            .unwrap();
        let r = compression_certificate(&lin, &samples);
        assert_eq!((r.max_gain, r.min_gain), (1.0, 1.0));
    }

    #[test]
    fn csv_export() {
        let tr = trace_substeps(&bundled::table2(), &henon_net_orbit(10)).unwrap();
        let dir = std::env::temp_dir().join("geochaos_geometry_csv");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("substeps.csv");
        tr.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("set_id,idx,y1,y2\n"));
        assert_eq!(text.lines().count(), 51);
        assert_eq!(tr.plot("substeps").render().matches("<circle").count(), 50);
    }

    proptest! {
        #[test]
        fn svd_invariants(vals in proptest::collection::vec(-5.0f64..5.0, 9)) {
            let m = DMatrix::from_row_slice(3, 3, &vals);
            check_triple(&m, &svd(&m));
        }

        #[test]
        fn growth_norm_through_svd(vals in proptest::collection::vec(-2.0f64..2.0, 12), dy in proptest::collection::vec(-1.0f64..1.0, 4)) {
            // |G W* dy| = |G U S Vᵀ dy| through this module's factors
            let net = Mlp::single_hidden(3, 4, 3, &vals, &[0.1, -0.2, 0.3, 0.0], &vals, &[0.0; 3], Activation::Tanh).unwrap();
            let t = svd_wstar(&net).unwrap();
            let y = DVector::from_vec(vec![0.2, -0.1, 0.4, 0.0]);
            let dy = DVector::from_vec(dy);
            let g = net.neuron_gains(&y).unwrap();
            let via_svd = g.component_mul(&(&t.u * (t.v.transpose() * &dy).component_mul(&t.s)));
            let direct = net.perturbation_growth(&y, &dy).unwrap();
            prop_assert!((via_svd.norm() - direct.norm()).abs() < 1e-10);
        }
    }
}
