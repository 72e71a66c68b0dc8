//! Ground-truth chaotic maps.
//!
//! Lorenz-63 is sampled on a uniform time grid by an adaptive Dormand-Prince
//! 5(4) integrator; the Hénon map is evaluated in closed form. Both sit behind
//! [`DiscreteMap`], which every analysis routine consumes.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::DynamicsError;

/// Components above this magnitude are treated as numerical blow-up.
pub const DEFAULT_DIVERGENCE_GUARD: f64 = 1e6;

/// Lorenz-63 phase-space point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl State3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_slice(s: &[f64]) -> Self {
        Self::new(s[0], s[1], s[2])
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// Hénon phase-space point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State2 {
    pub x: f64,
    pub y: f64,
}

impl State2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn from_slice(s: &[f64]) -> Self {
        Self::new(s[0], s[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct L63Params {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
    /// Model time advanced by one discrete step.
    pub dt: f64,
}

impl Default for L63Params {
    fn default() -> Self {
        Self {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
            dt: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HenonParams {
    pub a: f64,
    pub b: f64,
}

impl Default for HenonParams {
    fn default() -> Self {
        Self { a: 1.4, b: 0.3 }
    }
}

/// A deterministic, pure map from a state to the next state.
pub trait DiscreteMap: Sync {
    fn dim(&self) -> usize;

    /// Writes the image of `state` into `out`. Both slices have length `dim()`.
    fn apply_into(&self, state: &[f64], out: &mut [f64]);

    /// Short identifier used in file sidecars and reports.
    fn map_id(&self) -> String;

    /// Parameters echoed into data sidecars.
    fn params_json(&self) -> serde_json::Value {
        serde_json::Value::Null
    }

    fn apply(&self, state: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.apply_into(state, &mut out);
        out
    }
}

/// Maps with an exact one-step Jacobian.
pub trait DifferentiableMap: DiscreteMap {
    fn step_jacobian(&self, state: &[f64]) -> DMatrix<f64>;
}

impl<M: DiscreteMap + ?Sized> DiscreteMap for &M {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply_into(&self, state: &[f64], out: &mut [f64]) {
        (**self).apply_into(state, out)
    }
    fn map_id(&self) -> String {
        (**self).map_id()
    }
    fn params_json(&self) -> serde_json::Value {
        (**self).params_json()
    }
}

impl<M: DifferentiableMap + ?Sized> DifferentiableMap for &M {
    fn step_jacobian(&self, state: &[f64]) -> DMatrix<f64> {
        (**self).step_jacobian(state)
    }
}

pub fn l63_derivative(s: State3, p: &L63Params) -> State3 {
    State3 {
        x: p.sigma * (s.y - s.x),
        y: p.rho * s.x - s.y - s.x * s.z,
        z: -p.beta * s.z + s.x * s.y,
    }
}

#[inline]
fn rhs(s: &[f64; 3], p: &L63Params) -> [f64; 3] {
    [
        p.sigma * (s[1] - s[0]),
        p.rho * s[0] - s[1] - s[0] * s[2],
        -p.beta * s[2] + s[0] * s[1],
    ]
}

/// Adaptive step-size control for [`dopri45`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorTolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for IntegratorTolerance {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
        }
    }
}

// Dormand-Prince 5(4) tableau. The system is autonomous, so the nodes c_i are not needed.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the 5th- and 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[inline]
fn axpy(y: &[f64; 3], h: f64, terms: &[(f64, &[f64; 3])]) -> [f64; 3] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..3 {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Integrates Lorenz-63 from `s` over exactly `span` time units.
///
/// The last step is truncated to land on `span`. The starting step size is a
/// fixed fraction of `span`, so the result depends on `s` and the parameters
/// alone.
pub fn dopri45(s: [f64; 3], p: &L63Params, span: f64, tol: IntegratorTolerance) -> [f64; 3] {
    let mut y = s;
    let mut t = 0.0;
    let mut h = span / 4.0;
    let mut k1 = rhs(&y, p);
    let mut rejects = 0usize;
    while t < span {
        let last = t + h >= span * (1.0 - 1e-12);
        let step = if last { span - t } else { h };
        let k2 = rhs(&axpy(&y, step, &[(A21, &k1)]), p);
        let k3 = rhs(&axpy(&y, step, &[(A31, &k1), (A32, &k2)]), p);
        let k4 = rhs(&axpy(&y, step, &[(A41, &k1), (A42, &k2), (A43, &k3)]), p);
        let k5 = rhs(
            &axpy(&y, step, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            p,
        );
        let k6 = rhs(
            &axpy(
                &y,
                step,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
            p,
        );
        let y_new = axpy(
            &y,
            step,
            &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
        );
        let k7 = rhs(&y_new, p);

        let mut err = 0.0f64;
        for i in 0..3 {
            let e = step
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
            err += (e / sc).powi(2);
        }
        let err = (err / 3.0).sqrt();
        if !err.is_finite() {
            return [f64::NAN; 3];
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        if err <= 1.0 {
            t = if last { span } else { t + step };
            y = y_new;
            k1 = k7;
            h = step * factor;
        } else {
            rejects += 1;
            if rejects > 10_000 {
                return [f64::NAN; 3];
            }
            h = step * factor.min(1.0);
        }
    }
    y
}

/// Classical fixed-step RK4, used as an independent reference integrator.
pub fn rk4(s: [f64; 3], p: &L63Params, span: f64, n_sub: usize) -> [f64; 3] {
    let h = span / n_sub as f64;
    let mut y = s;
    for _ in 0..n_sub {
        let k1 = rhs(&y, p);
        let k2 = rhs(&axpy(&y, 0.5 * h, &[(1.0, &k1)]), p);
        let k3 = rhs(&axpy(&y, 0.5 * h, &[(1.0, &k2)]), p);
        let k4 = rhs(&axpy(&y, h, &[(1.0, &k3)]), p);
        y = axpy(
            &y,
            h / 6.0,
            &[(1.0, &k1), (2.0, &k2), (2.0, &k3), (1.0, &k4)],
        );
    }
    y
}

/// Advances Lorenz-63 by one discrete step of length `p.dt`.
pub fn l63_step(s: State3, p: &L63Params) -> Result<State3, DynamicsError> {
    let out = State3::from_slice(&dopri45(s.to_array(), p, p.dt, IntegratorTolerance::default()));
    if out.is_finite() {
        Ok(out)
    } else {
        Err(DynamicsError::NonFinite)
    }
}

/// The three sub-steps of one Hénon iteration: stretch, compression, reflection.
pub fn henon_substeps(s: State2, p: &HenonParams) -> (State2, State2, State2) {
    let stretch = State2::new(s.x, 1.0 - p.a * s.x * s.x + s.y);
    let compress = State2::new(p.b * stretch.x, stretch.y);
    let reflect = State2::new(compress.y, compress.x);
    (stretch, compress, reflect)
}

pub fn henon_step(s: State2, p: &HenonParams) -> State2 {
    henon_substeps(s, p).2
}

/// Lorenz-63 sampled every `params.dt`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct L63Map {
    pub params: L63Params,
    pub tol: IntegratorTolerance,
}

impl L63Map {
    pub fn new(params: L63Params) -> Self {
        Self {
            params,
            tol: IntegratorTolerance::default(),
        }
    }
}

impl DiscreteMap for L63Map {
    fn dim(&self) -> usize {
        3
    }

    fn apply_into(&self, state: &[f64], out: &mut [f64]) {
        let y = dopri45(
            [state[0], state[1], state[2]],
            &self.params,
            self.params.dt,
            self.tol,
        );
        out.copy_from_slice(&y);
    }

    fn map_id(&self) -> String {
        "l63".into()
    }

    fn params_json(&self) -> serde_json::Value {
        serde_json::json!({ "l63": self.params, "tolerance": self.tol })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct HenonMap {
    pub params: HenonParams,
}

impl HenonMap {
    pub fn new(params: HenonParams) -> Self {
        Self { params }
    }
}

impl DiscreteMap for HenonMap {
    fn dim(&self) -> usize {
        2
    }

    fn apply_into(&self, state: &[f64], out: &mut [f64]) {
        let s = henon_step(State2::from_slice(state), &self.params);
        out[0] = s.x;
        out[1] = s.y;
    }

    fn map_id(&self) -> String {
        "henon".into()
    }

    fn params_json(&self) -> serde_json::Value {
        serde_json::json!({ "henon": self.params })
    }
}

impl DifferentiableMap for HenonMap {
    fn step_jacobian(&self, state: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(
            2,
            2,
            &[-2.0 * self.params.a * state[0], 1.0, self.params.b, 0.0],
        )
    }
}

/// Linear map `x -> A x`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    pub matrix: DMatrix<f64>,
}

impl LinearMap {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        assert!(matrix.is_square(), "linear map needs a square matrix");
        Self { matrix }
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(DMatrix::identity(dim, dim))
    }
}

impl DiscreteMap for LinearMap {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply_into(&self, state: &[f64], out: &mut [f64]) {
        let n = self.dim();
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..n).map(|j| self.matrix[(i, j)] * state[j]).sum();
        }
    }

    fn map_id(&self) -> String {
        "linear".into()
    }
}

impl DifferentiableMap for LinearMap {
    fn step_jacobian(&self, _state: &[f64]) -> DMatrix<f64> {
        self.matrix.clone()
    }
}

/// A sequence of states stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    dim: usize,
    data: Vec<f64>,
}

impl Trajectory {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            data: Vec::new(),
        }
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

    pub fn push(&mut self, state: &[f64]) {
        debug_assert_eq!(state.len(), self.dim);
        self.data.extend_from_slice(state);
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn last(&self) -> Option<&[f64]> {
        self.len().checked_sub(1).map(|k| self.point(k))
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }
}

fn diverged(s: &[f64], guard: f64) -> bool {
    s.iter().any(|v| !v.is_finite() || v.abs() > guard)
}

/// Iterates `map` `n` times from `s0`, returning all `n + 1` states.
pub fn iterate<M: DiscreteMap + ?Sized>(
    map: &M,
    s0: &[f64],
    n: usize,
    guard: f64,
) -> Result<Trajectory, DynamicsError> {
    let dim = map.dim();
    if s0.len() != dim {
        return Err(DynamicsError::DimensionMismatch {
            expected: dim,
            got: s0.len(),
        });
    }
    if diverged(s0, guard) {
        return Err(DynamicsError::Diverged { step: 0 });
    }
    let mut traj = Trajectory {
        dim,
        data: Vec::with_capacity((n + 1) * dim),
    };
    traj.push(s0);
    let mut cur = s0.to_vec();
    let mut next = vec![0.0; dim];
    for k in 1..=n {
        map.apply_into(&cur, &mut next);
        if diverged(&next, guard) {
            return Err(DynamicsError::Diverged { step: k });
        }
        traj.push(&next);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(traj)
}

/// Advances `n` steps without storing the path.
pub fn advance<M: DiscreteMap + ?Sized>(
    map: &M,
    s0: &[f64],
    n: usize,
    guard: f64,
) -> Result<Vec<f64>, DynamicsError> {
    let mut cur = s0.to_vec();
    let mut next = vec![0.0; s0.len()];
    for k in 1..=n {
        map.apply_into(&cur, &mut next);
        if diverged(&next, guard) {
            return Err(DynamicsError::Diverged { step: k });
        }
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(cur)
}
