//! Feedforward emulator maps.
//!
//! The single-hidden-layer case `x' = W2 g(W1 x + b1) + b2` additionally
//! exposes its neuron-space form: with `y = g(W1 x + b1)` the hidden vector
//! evolves as `y' = g(W* y + b*)` where `W* = W1 W2` and `b* = W1 b2 + b1`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{DifferentiableMap, DiscreteMap};
use crate::error::NetworkError;

/// Scalar hidden-layer nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    /// Logistic sigmoid `1 / (1 + e^-x)`.
    Logsig,
    /// `x / (1 + |x|)`.
    Elliotsig,
    /// `exp(-x^2)`.
    Radbas,
    /// `ln(1 + e^x)`.
    Softplus,
    Relu,
    /// `max(0, 1 - |x|)`.
    Tribas,
    Linear,
}

impl Activation {
    pub const ALL: [Activation; 8] = [
        Activation::Tanh,
        Activation::Logsig,
        Activation::Elliotsig,
        Activation::Radbas,
        Activation::Softplus,
        Activation::Relu,
        Activation::Tribas,
        Activation::Linear,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Logsig => "logsig",
            Activation::Elliotsig => "elliotsig",
            Activation::Radbas => "radbas",
            Activation::Softplus => "softplus",
            Activation::Relu => "relu",
            Activation::Tribas => "tribas",
            Activation::Linear => "linear",
        }
    }

    #[inline]
    pub fn value(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Logsig => logistic(x),
            Activation::Elliotsig => x / (1.0 + x.abs()),
            Activation::Radbas => (-x * x).exp(),
            Activation::Softplus => softplus(x),
            Activation::Relu => x.max(0.0),
            Activation::Tribas => (1.0 - x.abs()).max(0.0),
            Activation::Linear => x,
        }
    }

    /// Derivative; kinks of relu and tribas take the right derivative
    /// (interior value at the tribas endpoints `±1`).
    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => {
                // sech^2 stays positive where 1 - tanh^2 rounds to zero
                let c = x.cosh();
                1.0 / (c * c)
            }
            Activation::Logsig => {
                let s = logistic(x);
                s * (1.0 - s)
            }
            Activation::Elliotsig => {
                let d = 1.0 + x.abs();
                1.0 / (d * d)
            }
            Activation::Radbas => -2.0 * x * (-x * x).exp(),
            Activation::Softplus => logistic(x),
            Activation::Relu => {
                if x >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tribas => {
                if x.abs() > 1.0 {
                    0.0
                } else if x < 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
            Activation::Linear => 1.0,
        }
    }

    /// Range is bounded and the derivative lies in `(0, 1]`.
    pub fn is_sigmoidal(self) -> bool {
        matches!(self, Activation::Tanh | Activation::Elliotsig)
    }
}

#[inline]
fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn softplus(x: f64) -> f64 {
    // ln(1 + e^x) without overflow
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = NetworkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        Activation::ALL
            .into_iter()
            .find(|a| a.name() == lower)
            .or(match lower.as_str() {
                "purelin" => Some(Activation::Linear),
                "tansig" => Some(Activation::Tanh),
                _ => None,
            })
            .ok_or_else(|| NetworkError::UnknownActivation(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
}

impl Layer {
    pub fn new(weights: DMatrix<f64>, bias: DVector<f64>) -> Self {
        Self { weights, bias }
    }

    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }

    fn affine(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.weights * x + &self.bias
    }
}

/// Provenance stored with a model file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub seed: Option<u64>,
    pub epochs: Option<usize>,
    pub n_train: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Layered feedforward map: every layer but the last applies `activation`,
/// the last is affine.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Layer>,
    activation: Activation,
    pub map_id: String,
    pub training_meta: TrainingMeta,
}

/// `W* = W1 W2`, `b* = W1 b2 + b1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectivePair {
    pub wstar: DMatrix<f64>,
    pub bstar: DVector<f64>,
}

/// Intermediate values of one forward pass.
struct Tape {
    /// Layer inputs, `inputs[0] = x`.
    inputs: Vec<DVector<f64>>,
    /// Hidden pre-activations.
    pre: Vec<DVector<f64>>,
    output: DVector<f64>,
}

impl Mlp {
    pub fn new(layers: Vec<Layer>, activation: Activation) -> Result<Self, NetworkError> {
        if layers.len() < 2 {
            return Err(NetworkError::Shape(
                "need at least one hidden layer and an output layer".into(),
            ));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.bias.len() != l.outputs() {
                return Err(NetworkError::Shape(format!(
                    "layer {i}: bias length {} vs {} rows",
                    l.bias.len(),
                    l.outputs()
                )));
            }
            if i > 0 && layers[i - 1].outputs() != l.inputs() {
                return Err(NetworkError::Shape(format!(
                    "layer {i} takes {} inputs, previous layer emits {}",
                    l.inputs(),
                    layers[i - 1].outputs()
                )));
            }
            if l.weights.iter().chain(l.bias.iter()).any(|v| !v.is_finite()) {
                return Err(NetworkError::NonFinite(i));
            }
        }
        Ok(Self {
            layers,
            activation,
            map_id: String::new(),
            training_meta: TrainingMeta::default(),
        })
    }

    /// Single hidden layer from row-major buffers: `w1` is `hidden x n_in`,
    /// `w2` is `n_out x hidden`.
    pub fn single_hidden(
        n_in: usize,
        hidden: usize,
        n_out: usize,
        w1: &[f64],
        b1: &[f64],
        w2: &[f64],
        b2: &[f64],
        activation: Activation,
    ) -> Result<Self, NetworkError> {
        if w1.len() != hidden * n_in || w2.len() != n_out * hidden {
            return Err(NetworkError::Shape("weight buffer length".into()));
        }
        Self::new(
            vec![
                Layer::new(
                    DMatrix::from_row_slice(hidden, n_in, w1),
                    DVector::from_column_slice(b1),
                ),
                Layer::new(
                    DMatrix::from_row_slice(n_out, hidden, w2),
                    DVector::from_column_slice(b2),
                ),
            ],
            activation,
        )
    }

    pub fn with_map_id(mut self, id: impl Into<String>) -> Self {
        self.map_id = id.into();
        self
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().outputs()
    }

    pub fn hidden_layers(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn hidden_widths(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1]
            .iter()
            .map(Layer::outputs)
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// Parameters in storage order: per layer, weights row-major then bias.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            for r in 0..l.outputs() {
                out.extend(l.weights.row(r).iter());
            }
            out.extend(l.bias.iter());
        }
        out
    }

    pub fn set_params(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.param_count());
        let mut k = 0;
        for l in &mut self.layers {
            for r in 0..l.weights.nrows() {
                for c in 0..l.weights.ncols() {
                    l.weights[(r, c)] = p[k];
                    k += 1;
                }
            }
            for b in l.bias.iter_mut() {
                *b = p[k];
                k += 1;
            }
        }
    }

    /// Sum of squared parameters.
    pub fn weight_energy(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()))
            .map(|v| v * v)
            .sum()
    }

    fn activate(&self, a: &DVector<f64>) -> DVector<f64> {
        a.map(|v| self.activation.value(v))
    }

    fn gains(&self, a: &DVector<f64>) -> DVector<f64> {
        a.map(|v| self.activation.derivative(v))
    }

    fn tape(&self, x: &[f64]) -> Tape {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len() - 1);
        let mut h = DVector::from_column_slice(x);
        let (last, hidden) = self.layers.split_last().unwrap();
        for l in hidden {
            let a = l.affine(&h);
            inputs.push(h);
            h = self.activate(&a);
            pre.push(a);
        }
        let output = last.affine(&h);
        inputs.push(h);
        Tape {
            inputs,
            pre,
            output,
        }
    }

    pub fn forward(&self, x: &[f64]) -> DVector<f64> {
        assert_eq!(x.len(), self.input_dim(), "input dimension");
        let mut h = DVector::from_column_slice(x);
        let (last, hidden) = self.layers.split_last().unwrap();
        for l in hidden {
            h = self.activate(&l.affine(&h));
        }
        last.affine(&h)
    }

    /// Pre-activations of each hidden layer at `x`.
    pub fn pre_activations(&self, x: &[f64]) -> Vec<DVector<f64>> {
        self.tape(x).pre
    }

    /// Analytic Jacobian `W_{N+1} G_N W_N ... G_1 W_1` at `x`.
    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let tape = self.tape(x);
        let mut j = self.layers[0].weights.clone();
        for (i, a) in tape.pre.iter().enumerate() {
            let g = self.gains(a);
            for (r, gr) in g.iter().enumerate() {
                j.row_mut(r).scale_mut(*gr);
            }
            j = &self.layers[i + 1].weights * j;
        }
        j
    }

    /// Output and the derivative of each output with respect to every
    /// parameter (`n_out x param_count`, columns in [`Mlp::params`] order).
    pub fn param_jacobian(&self, x: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let tape = self.tape(x);
        let n_out = self.output_dim();
        let mut jac = DMatrix::zeros(n_out, self.param_count());

        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut k = 0;
        for l in &self.layers {
            offsets.push(k);
            k += l.weights.len() + l.bias.len();
        }

        // sens = d output / d (pre-activation of the current layer)
        let mut sens = DMatrix::<f64>::identity(n_out, n_out);
        for li in (0..self.layers.len()).rev() {
            let l = &self.layers[li];
            let input = &tape.inputs[li];
            let (rows, cols) = (l.outputs(), l.inputs());
            let off = offsets[li];
            for r in 0..rows {
                for c in 0..cols {
                    let col = off + r * cols + c;
                    for o in 0..n_out {
                        jac[(o, col)] = sens[(o, r)] * input[c];
                    }
                }
                for o in 0..n_out {
                    jac[(o, off + rows * cols + r)] = sens[(o, r)];
                }
            }
            if li > 0 {
                let g = self.gains(&tape.pre[li - 1]);
                let mut next = &sens * &l.weights;
                for (c, gc) in g.iter().enumerate() {
                    next.column_mut(c).scale_mut(*gc);
                }
                sens = next;
            }
        }
        (tape.output, jac)
    }

    fn require_single(&self) -> Result<(), NetworkError> {
        if self.hidden_layers() == 1 {
            Ok(())
        } else {
            Err(NetworkError::MultiLayer(self.hidden_layers()))
        }
    }

    /// `y = g(W1 x + b1)`.
    pub fn neuron_encode(&self, x: &[f64]) -> Result<DVector<f64>, NetworkError> {
        self.require_single()?;
        Ok(self.activate(&self.layers[0].affine(&DVector::from_column_slice(x))))
    }

    /// Phase-space point of a neuron vector: `W2 y + b2`.
    pub fn neuron_decode(&self, y: &DVector<f64>) -> Result<DVector<f64>, NetworkError> {
        self.require_single()?;
        Ok(self.layers[1].affine(y))
    }

    pub fn effective_pair(&self) -> Result<EffectivePair, NetworkError> {
        self.require_single()?;
        let (l1, l2) = (&self.layers[0], &self.layers[1]);
        if l2.outputs() != l1.inputs() {
            return Err(NetworkError::Shape(
                "neuron map needs equal input and output dimensions".into(),
            ));
        }
        Ok(EffectivePair {
            wstar: &l1.weights * &l2.weights,
            bstar: &l1.weights * &l2.bias + &l1.bias,
        })
    }

    /// One step of the neuron map `y' = g(W* y + b*)`.
    pub fn neuron_step(&self, y: &DVector<f64>) -> Result<DVector<f64>, NetworkError> {
        let e = self.effective_pair()?;
        Ok(self.neuron_step_with(&e, y))
    }

    pub fn neuron_step_with(&self, e: &EffectivePair, y: &DVector<f64>) -> DVector<f64> {
        self.activate(&(&e.wstar * y + &e.bstar))
    }

    /// Linearized neuron-map growth `g'(W* y + b*) ⊙ (W* dy)`.
    pub fn perturbation_growth(
        &self,
        y: &DVector<f64>,
        dy: &DVector<f64>,
    ) -> Result<DVector<f64>, NetworkError> {
        let e = self.effective_pair()?;
        let g = self.gains(&(&e.wstar * y + &e.bstar));
        Ok(g.component_mul(&(&e.wstar * dy)))
    }

    /// Diagonal of the gradient matrix `G` at neuron vector `y`.
    pub fn neuron_gains(&self, y: &DVector<f64>) -> Result<DVector<f64>, NetworkError> {
        let e = self.effective_pair()?;
        Ok(self.gains(&(&e.wstar * y + &e.bstar)))
    }

    /// Pushes `dx` through `W_1, G_1, ..., G_N, W_{N+1}` one factor at a time.
    pub fn multilayer_growth(&self, x: &[f64], dx: &[f64]) -> DVector<f64> {
        let tape = self.tape(x);
        let mut v = DVector::from_column_slice(dx);
        for (i, l) in self.layers.iter().enumerate() {
            v = &l.weights * v;
            if let Some(a) = tape.pre.get(i) {
                v.component_mul_assign(&self.gains(a));
            }
        }
        v
    }

    pub fn to_file_format(&self) -> ModelFile {
        let mut dims = vec![self.input_dim()];
        dims.extend(self.layers.iter().map(Layer::outputs));
        ModelFile {
            map_id: self.map_id.clone(),
            dims,
            layers: self
                .layers
                .iter()
                .map(|l| LayerRecord {
                    rows: l.outputs(),
                    cols: l.inputs(),
                    weights: (0..l.outputs())
                        .flat_map(|r| l.weights.row(r).iter().copied().collect::<Vec<_>>())
                        .collect(),
                    bias: l.bias.iter().copied().collect(),
                })
                .collect(),
            activation: self.activation,
            training_meta: self.training_meta.clone(),
        }
    }

    pub fn from_file_format(f: ModelFile) -> Result<Self, NetworkError> {
        let layers = f
            .layers
            .into_iter()
            .enumerate()
            .map(|(i, l)| {
                if l.weights.len() != l.rows * l.cols {
                    return Err(NetworkError::Shape(format!(
                        "layer {i}: {} weights for a {}x{} matrix",
                        l.weights.len(),
                        l.rows,
                        l.cols
                    )));
                }
                Ok(Layer::new(
                    DMatrix::from_row_slice(l.rows, l.cols, &l.weights),
                    DVector::from_vec(l.bias),
                ))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut net = Mlp::new(layers, f.activation)?;
        let mut dims = vec![net.input_dim()];
        dims.extend(net.layers.iter().map(Layer::outputs));
        if !f.dims.is_empty() && f.dims != dims {
            return Err(NetworkError::Shape(format!(
                "declared dims {:?}, layers imply {:?}",
                f.dims, dims
            )));
        }
        net.map_id = f.map_id;
        net.training_meta = f.training_meta;
        Ok(net)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file_format()).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, NetworkError> {
        Self::from_file_format(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), NetworkError> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, NetworkError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRecord {
    pub rows: usize,
    pub cols: usize,
    /// Row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// On-disk model schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    #[serde(default)]
    pub map_id: String,
    #[serde(default)]
    pub dims: Vec<usize>,
    pub layers: Vec<LayerRecord>,
    pub activation: Activation,
    #[serde(default)]
    pub training_meta: TrainingMeta,
}

impl DiscreteMap for Mlp {
    fn dim(&self) -> usize {
        self.input_dim()
    }

    fn apply_into(&self, state: &[f64], out: &mut [f64]) {
        out.copy_from_slice(self.forward(state).as_slice());
    }

    fn map_id(&self) -> String {
        if self.map_id.is_empty() {
            "mlp".into()
        } else {
            format!("mlp:{}", self.map_id)
        }
    }
}

impl DifferentiableMap for Mlp {
    fn step_jacobian(&self, state: &[f64]) -> DMatrix<f64> {
        self.jacobian(state)
    }
}

/// Bundled reference models.
pub mod bundled {
    use super::Mlp;

    /// The 4-neuron Lorenz-63 net with its hidden layer refined inside the
    /// printed 4-decimal rounding interval (`W*` keeps the published singular
    /// values).
    pub const TABLE1: &str = include_str!("../assets/table1.json");
    /// The 4-neuron Lorenz-63 net exactly as printed.
    pub const TABLE1_PRINTED: &str = include_str!("../assets/table1_printed.json");
    /// The 2-neuron Hénon net exactly as printed.
    pub const TABLE2: &str = include_str!("../assets/table2.json");

    pub fn table1() -> Mlp {
        Mlp::from_json(TABLE1).expect("bundled model parses")
    }

    pub fn table1_printed() -> Mlp {
        Mlp::from_json(TABLE1_PRINTED).expect("bundled model parses")
    }

    pub fn table2() -> Mlp {
        Mlp::from_json(TABLE2).expect("bundled model parses")
    }
}
