//! Neuron-count lower bounds and the cubic expansion of a trained net.

use std::collections::BTreeMap;

use nalgebra::DVector;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::PointCloud;
use crate::dynamics::DiscreteMap;
use crate::error::BoundsError;
use crate::network::{Activation, Mlp};
use crate::rng::{streams, substream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub n: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    pub value: f64,
    /// Exact integer value where the bound is integral.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value_exact: Option<u128>,
    /// Rounded-up value where the formula itself takes the ceiling.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value_ceil: Option<u128>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl BoundReport {
    fn new(name: &str, n: u32, d: Option<u32>, value: f64) -> Self {
        Self {
            name: name.into(),
            n,
            d,
            eps: None,
            value,
            value_exact: None,
            value_ceil: None,
            note: None,
        }
    }
}

/// Exact binomial coefficient; panics on overflow of `u128`.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k as u128 {
        // acc * (n - i) is divisible by (i + 1) after the multiply
        acc = acc.checked_mul(n as u128 - i).expect("binomial overflow") / (i + 1);
    }
    acc
}

fn check_nd(n: u32, d: u32) -> Result<(), BoundsError> {
    if n == 0 || d == 0 {
        return Err(BoundsError::Invalid(format!("need n >= 1 and d >= 1, got n={n}, d={d}")));
    }
    Ok(())
}

/// `n^{6d} / eps³`.
pub fn andoni_bound(n: u32, d: u32, eps: f64) -> Result<BoundReport, BoundsError> {
    check_nd(n, d)?;
    if !(eps > 0.0) {
        return Err(BoundsError::Invalid(format!("eps must be > 0, got {eps}")));
    }
    let numerator = (n as u128).checked_pow(6 * d);
    let value = match numerator {
        Some(p) => p as f64 / eps.powi(3),
        None => (6.0 * d as f64 * (n as f64).ln() - 3.0 * eps.ln()).exp(),
    };
    let mut r = BoundReport::new("andoni", n, Some(d), value);
    r.eps = Some(eps);
    if eps == 1.0 {
        r.value_exact = numerator;
    }
    Ok(r)
}

/// `C(n+d, d) - (n+1)`.
pub fn polynet_bound(n: u32, d: u32) -> Result<BoundReport, BoundsError> {
    check_nd(n, d)?;
    let exact = binomial((n + d) as u64, d as u64) - (n as u128 + 1);
    let mut r = BoundReport::new("polynet", n, Some(d), exact as f64);
    r.value_exact = Some(exact);
    Ok(r)
}

/// `n / (2n+1) * (C(n+d, d) - 1)`, unrounded.
pub fn standard_nn_bound(n: u32, d: u32) -> Result<BoundReport, BoundsError> {
    check_nd(n, d)?;
    let c = binomial((n + d) as u64, d as u64) - 1;
    let mut r = BoundReport::new(
        "standard_nn",
        n,
        Some(d),
        n as f64 * c as f64 / (2 * n + 1) as f64,
    );
    if (n, d) == (3, 2) {
        r.note = Some("the published estimate for n=3, d=2 is quoted as about 5 neurons; the formula gives 27/7".into());
    }
    Ok(r)
}

/// `ceil((3 C(n+3, 3) - n) / (2n+1))`.
pub fn taylor_count_bound(n: u32) -> Result<BoundReport, BoundsError> {
    check_nd(n, 1)?;
    let num = 3 * binomial(n as u64 + 3, 3) - n as u128;
    let den = 2 * n as u128 + 1;
    let mut r = BoundReport::new("taylor_count", n, None, num as f64 / den as f64);
    r.value_ceil = Some(num.div_ceil(den));
    Ok(r)
}

/// All four bounds for one `(n, d, eps)`.
pub fn bounds_table(n: u32, d: u32, eps: f64) -> Result<Vec<BoundReport>, BoundsError> {
    Ok(vec![
        andoni_bound(n, d, eps)?,
        polynet_bound(n, d)?,
        standard_nn_bound(n, d)?,
        taylor_count_bound(n)?,
    ])
}

/// Exponent tuples of all monomials in `n` variables of total degree <= 3,
/// graded then lexicographic.
pub fn cubic_monomials(n: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    for deg in 0..=3u8 {
        exact_degree(n, deg, &mut Vec::with_capacity(n), &mut out);
    }
    out
}

fn exact_degree(n: usize, left: u8, prefix: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if prefix.len() + 1 == n {
        prefix.push(left);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for e in (0..=left).rev() {
        prefix.push(e);
        exact_degree(n, left - e, prefix, out);
        prefix.pop();
    }
}

/// Sparse polynomial keyed by exponent tuple.
type Poly = BTreeMap<Vec<u8>, f64>;

fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = Poly::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            let e: Vec<u8> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
            *out.entry(e).or_insert(0.0) += ca * cb;
        }
    }
    out
}

fn poly_axpy(acc: &mut Poly, k: f64, p: &Poly) {
    for (e, c) in p {
        *acc.entry(e.clone()).or_insert(0.0) += k * c;
    }
}

/// Polynomial of total degree <= 3 per output component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubicPoly {
    pub n_inputs: usize,
    pub monomials: Vec<Vec<u8>>,
    /// `coefficients[output][monomial]`.
    pub coefficients: Vec<Vec<f64>>,
}

impl CubicPoly {
    pub fn eval(&self, x: &[f64]) -> DVector<f64> {
        let terms: Vec<f64> = self
            .monomials
            .iter()
            .map(|e| e.iter().zip(x).map(|(&p, &v)| v.powi(p as i32)).product())
            .collect();
        DVector::from_iterator(
            self.coefficients.len(),
            self.coefficients
                .iter()
                .map(|c| c.iter().zip(&terms).map(|(a, t)| a * t).sum::<f64>()),
        )
    }

    pub fn coefficient(&self, output: usize, exponents: &[u8]) -> f64 {
        self.monomials
            .iter()
            .position(|e| e == exponents)
            .map_or(0.0, |i| self.coefficients[output][i])
    }
}

/// Substitutes `tanh(z) ≈ z - z³/3` (or `g(z) = z` for linear nets) into the
/// single-hidden-layer net and collects monomial coefficients.
pub fn expand_cubic(net: &Mlp) -> Result<CubicPoly, BoundsError> {
    if net.hidden_layers() != 1 {
        return Err(BoundsError::MultiLayer);
    }
    let truncate_cubic = match net.activation() {
        Activation::Tanh => true,
        Activation::Linear => false,
        other => return Err(BoundsError::UnsupportedActivation(other.name().into())),
    };
    let (l1, l2) = (&net.layers()[0], &net.layers()[1]);
    let n = l1.inputs();
    let unit = |i: usize| {
        let mut e = vec![0u8; n];
        e[i] = 1;
        e
    };
    let mut outputs: Vec<Poly> = (0..l2.outputs())
        .map(|o| Poly::from([(vec![0u8; n], l2.bias[o])]))
        .collect();
    for j in 0..l1.outputs() {
        let mut z = Poly::from([(vec![0u8; n], l1.bias[j])]);
        for i in 0..n {
            z.insert(unit(i), l1.weights[(j, i)]);
        }
        let mut g = z.clone();
        if truncate_cubic {
            let z3 = poly_mul(&poly_mul(&z, &z), &z);
            poly_axpy(&mut g, -1.0 / 3.0, &z3);
        }
        for (o, out) in outputs.iter_mut().enumerate() {
            poly_axpy(out, l2.weights[(o, j)], &g);
        }
    }
    let monomials = cubic_monomials(n);
    let coefficients = outputs
        .iter()
        .map(|p| monomials.iter().map(|e| p.get(e).copied().unwrap_or(0.0)).collect())
        .collect();
    Ok(CubicPoly {
        n_inputs: n,
        monomials,
        coefficients,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolyErrorReport {
    /// `sqrt(mean |p(x) - f(x)|² / mean |f(x) - mean f|²)`.
    pub normalized: f64,
    /// `sqrt(mean over samples and components of (p(x) - f(x))²)`.
    pub raw_rms: f64,
    pub n_samples: usize,
}

/// Error of the net's cubic expansion against the true map on cloud samples.
pub fn nn_poly_error<M: DiscreteMap + ?Sized>(
    net: &Mlp,
    map: &M,
    cloud: &PointCloud,
    n_samples: usize,
    seed: u64,
) -> Result<PolyErrorReport, BoundsError> {
    let poly = expand_cubic(net)?;
    poly_error(&poly, map, cloud, n_samples, seed)
}

pub fn poly_error<M: DiscreteMap + ?Sized>(
    poly: &CubicPoly,
    map: &M,
    cloud: &PointCloud,
    n_samples: usize,
    seed: u64,
) -> Result<PolyErrorReport, BoundsError> {
    if cloud.is_empty() || n_samples == 0 {
        return Err(BoundsError::Invalid("need a non-empty cloud and n_samples >= 1".into()));
    }
    let mut rng = substream(seed, streams::POLY);
    let picks: Vec<usize> = if n_samples <= cloud.len() {
        sample(&mut rng, cloud.len(), n_samples).into_vec()
    } else {
        (0..n_samples).map(|_| rng.random_range(0..cloud.len())).collect()
    };
    let dim = map.dim();
    let truth: Vec<Vec<f64>> = picks.iter().map(|&i| map.apply(cloud.point(i))).collect();
    let approx: Vec<DVector<f64>> = picks.iter().map(|&i| poly.eval(cloud.point(i))).collect();
    let mean: Vec<f64> = (0..dim)
        .map(|a| truth.iter().map(|t| t[a]).sum::<f64>() / truth.len() as f64)
        .collect();
    let mut err2 = 0.0;
    let mut var = 0.0;
    for (t, p) in truth.iter().zip(&approx) {
        for a in 0..dim {
            err2 += (p[a] - t[a]).powi(2);
            var += (t[a] - mean[a]).powi(2);
        }
    }
    let n = picks.len() as f64;
    Ok(PolyErrorReport {
        normalized: (err2 / var).sqrt(),
        raw_rms: (err2 / (n * dim as f64)).sqrt(),
        n_samples: picks.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{HenonMap, LinearMap};
    use crate::network::bundled;
    use nalgebra::DMatrix;
    use num_bigint::BigUint;
    use proptest::prelude::*;

    fn big_binomial(n: u64, k: u64) -> BigUint {
        let mut num = BigUint::from(1u32);
        let mut den = BigUint::from(1u32);
        for i in 0..k {
            num *= BigUint::from(n - i);
            den *= BigUint::from(i + 1);
        }
        num / den
    }

    #[test]
    fn andoni_examples() {
        assert_eq!(andoni_bound(3, 2, 1.0).unwrap().value_exact, Some(531_441));
        assert_eq!(andoni_bound(2, 2, 1.0).unwrap().value_exact, Some(4096));
        assert_eq!(andoni_bound(1, 1, 1.0).unwrap().value, 1.0);
        assert!((andoni_bound(3, 2, 0.5).unwrap().value - 531_441.0 * 8.0).abs() < 1e-6);
        assert!(andoni_bound(3, 2, 0.0).is_err());
    }

    #[test]
    fn polynet_examples() {
        assert_eq!(polynet_bound(3, 2).unwrap().value_exact, Some(6));
        assert_eq!(polynet_bound(1, 1).unwrap().value_exact, Some(0));
        assert_eq!(polynet_bound(2, 2).unwrap().value_exact, Some(3));
    }

    #[test]
    fn standard_nn_examples() {
        let r = standard_nn_bound(3, 2).unwrap();
        assert!((r.value - 27.0 / 7.0).abs() < 1e-12);
        assert!(r.note.is_some());
        assert!((standard_nn_bound(1, 1).unwrap().value - 1.0 / 3.0).abs() < 1e-12);
        assert!((standard_nn_bound(2, 2).unwrap().value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn taylor_examples() {
        assert_eq!(taylor_count_bound(3).unwrap().value_ceil, Some(9));
        assert_eq!(taylor_count_bound(1).unwrap().value_ceil, Some(4));
        assert_eq!(taylor_count_bound(2).unwrap().value_ceil, Some(6));
        assert!(taylor_count_bound(0).is_err());
    }

    #[test]
    fn monomial_count() {
        for n in 1..6usize {
            let m = cubic_monomials(n);
            assert_eq!(m.len() as u128, binomial(n as u64 + 3, 3));
            let mut sorted = m.clone();
            sorted.sort();
            sorted.dedup();
            assert_eq!(sorted.len(), m.len());
            assert!(m.iter().all(|e| e.iter().map(|&p| p as u32).sum::<u32>() <= 3));
        }
    }

    #[test]
    fn zero_input_weights_give_constant() {
        let b1 = [0.4, -0.7];
        let net = Mlp::single_hidden(2, 2, 2, &[0.0; 4], &b1, &[1.0, 2.0, -1.0, 0.5], &[0.3, 0.1], Activation::Tanh)
            .unwrap();
        let p = expand_cubic(&net).unwrap();
        let t = |b: f64| b - b * b * b / 3.0;
        assert!((p.coefficient(0, &[0, 0]) - (t(b1[0]) + 2.0 * t(b1[1]) + 0.3)).abs() < 1e-15);
        assert!((p.coefficient(1, &[0, 0]) - (-t(b1[0]) + 0.5 * t(b1[1]) + 0.1)).abs() < 1e-15);
        let nonconstant: f64 = p.coefficients.iter().flat_map(|c| c[1..].iter()).map(|v| v.abs()).sum();
        assert_eq!(nonconstant, 0.0);
    }

    #[test]
    fn scalar_net_is_truncated_tanh() {
        let net = Mlp::single_hidden(1, 1, 1, &[1.0], &[0.0], &[1.0], &[0.0], Activation::Tanh).unwrap();
        let p = expand_cubic(&net).unwrap();
        assert_eq!(p.coefficients[0], vec![0.0, 1.0, 0.0, -1.0 / 3.0]);
    }

    #[test]
    fn small_inputs_match_forward() {
        let mut rng = substream(3, 0);
        let mut u = |k: usize, r: f64| -> Vec<f64> { (0..k).map(|_| rng.random_range(-r..r)).collect() };
        let (w1, b1, w2, b2) = (u(12, 0.1), u(4, 0.05), u(12, 1.0), u(3, 1.0));
        let net = Mlp::single_hidden(3, 4, 3, &w1, &b1, &w2, &b2, Activation::Tanh).unwrap();
        let p = expand_cubic(&net).unwrap();
        let mut checked = 0;
        while checked < 100 {
            let x = u(3, 1.0);
            let pre = &net.layers()[0].weights * DVector::from_column_slice(&x) + &net.layers()[0].bias;
            if pre.amax() >= 0.3 {
                continue;
            }
            assert!((p.eval(&x) - net.forward(&x)).amax() < 5e-4);
            checked += 1;
        }
    }

    #[test]
    fn expansion_is_exact_algebra() {
        let net = bundled::table1();
        let p = expand_cubic(&net).unwrap();
        let (l1, l2) = (&net.layers()[0], &net.layers()[1]);
        let mut rng = substream(6, 0);
        for _ in 0..50 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-30.0..30.0)).collect();
            let z = &l1.weights * DVector::from_column_slice(&x) + &l1.bias;
            let direct = &l2.weights * z.map(|v| v - v.powi(3) / 3.0) + &l2.bias;
            let got = p.eval(&x);
            assert!((got - &direct).amax() < 1e-12 * direct.amax().max(1.0));
        }
    }

    #[test]
    fn unsupported_activation() {
        let net = Mlp::single_hidden(1, 1, 1, &[1.0], &[0.0], &[1.0], &[0.0], Activation::Relu).unwrap();
        assert!(matches!(expand_cubic(&net), Err(BoundsError::UnsupportedActivation(_))));
    }

    fn henon_cloud() -> PointCloud {
        let map = HenonMap::default();
        let mut x = vec![0.1, 0.1];
        let mut data = Vec::new();
        for k in 0..3000 {
            x = map.apply(&x);
            if k >= 100 {
                data.extend_from_slice(&x);
            }
        }
        PointCloud::from_flat(2, data)
    }

    #[test]
    fn exact_linear_net_has_zero_error() {
        let a = DMatrix::from_row_slice(2, 2, &[0.5, 0.2, -0.1, 0.9]);
        let map = LinearMap::new(a.clone());
        let net = Mlp::single_hidden(2, 2, 2, &[1.0, 0.0, 0.0, 1.0], &[0.0, 0.0], a.transpose().as_slice(), &[0.0, 0.0], Activation::Linear)
            .unwrap();
        let r = nn_poly_error(&net, &map, &henon_cloud(), 500, 1).unwrap();
        assert!(r.normalized < 1e-12 && r.raw_rms < 1e-12);
    }

    #[test]
    fn mean_predictor_has_unit_error() {
        let cloud = henon_cloud();
        let map = HenonMap::default();
        let mean: Vec<f64> = {
            let imgs: Vec<Vec<f64>> = cloud.points().map(|p| map.apply(p)).collect();
            (0..2).map(|a| imgs.iter().map(|v| v[a]).sum::<f64>() / imgs.len() as f64).collect()
        };
        let net = Mlp::single_hidden(2, 1, 2, &[0.0, 0.0], &[0.0], &[0.0, 0.0], &mean, Activation::Tanh).unwrap();
        let r = nn_poly_error(&net, &map, &cloud, 2000, 3).unwrap();
        assert!((r.normalized - 1.0).abs() < 0.05, "{}", r.normalized);
    }

    #[test]
    fn parameter_count_identity() {
        for (n, l) in [(3usize, 4usize), (2, 2), (3, 8), (5, 1)] {
            let net = Mlp::single_hidden(n, l, n, &vec![0.0; n * l], &vec![0.0; l], &vec![0.0; n * l], &vec![0.0; n], Activation::Tanh)
                .unwrap();
            assert_eq!(net.param_count(), 2 * n * l + n + l);
        }
    }

    proptest! {
        #[test]
        fn bounds_agree_with_big_integers(n in 1u32..40, d in 1u32..8) {
            let c = big_binomial((n + d) as u64, d as u64);
            prop_assert_eq!(BigUint::from(binomial((n + d) as u64, d as u64)), c.clone());
            let poly = polynet_bound(n, d).unwrap().value_exact.unwrap();
            prop_assert_eq!(BigUint::from(poly), c - BigUint::from(n + 1));
            let c3 = big_binomial(n as u64 + 3, 3);
            let num = BigUint::from(3u32) * c3 - BigUint::from(n);
            let den = BigUint::from(2 * n + 1);
            let ceil = (&num + &den - BigUint::from(1u32)) / den;
            prop_assert_eq!(BigUint::from(taylor_count_bound(n).unwrap().value_ceil.unwrap()), ceil);
            if let Some(v) = andoni_bound(n, d, 1.0).unwrap().value_exact {
                prop_assert_eq!(BigUint::from(v), BigUint::from(n).pow(6 * d));
            }
        }
    }
}
