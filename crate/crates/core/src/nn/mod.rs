//! The multi-label intent classifier: masked input, a BiLSTM encoder whose
//! forward and backward final states are concatenated, and a sigmoid dense
//! head emitting one probability per label. LSTM and CNN bodies are kept as
//! baselines. Everything — forward, backward-through-time, the optimizer —
//! is implemented here in plain f64 so gradients can be verified against
//! finite differences.

pub mod adam;
pub mod backward;
pub mod forward;
pub mod loss;
pub mod matrix;
pub mod train;

use serde::{Deserialize, Serialize};

use crate::corpus::IntentLabel;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use matrix::Matrix;

pub use adam::{adam_step, AdamState};
pub use backward::{backward, sample_loss};
pub use forward::{bilstm_forward, cnn_forward, dense_sigmoid, lstm_forward, pad_mask, predict};
pub use loss::bce_loss;
pub use train::{train, TrainConfig, TrainReport};

pub const CNN_KERNEL: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Bilstm,
    Lstm,
    Cnn,
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Variant::Bilstm => write!(f, "bilstm"),
            Variant::Lstm => write!(f, "lstm"),
            Variant::Cnn => write!(f, "cnn"),
        }
    }
}

/// Model shape: `a` functions per contract, `b` features per function,
/// `h` hidden units per direction, `l` labels (fixed at 10).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub max_functions: usize,
    pub feature_dim: usize,
    pub hidden: usize,
    pub labels: usize,
    pub variant: Variant,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            max_functions: 256,
            feature_dim: 512,
            hidden: 64,
            labels: IntentLabel::COUNT,
            variant: Variant::Bilstm,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_functions < 1 || self.feature_dim < 1 || self.hidden < 1 {
            return Err(Error::InvalidConfig(
                "max_functions, feature_dim, and hidden must be at least 1".to_string(),
            ));
        }
        if self.labels != IntentLabel::COUNT {
            return Err(Error::InvalidConfig(format!(
                "label count is fixed at {}, got {}",
                IntentLabel::COUNT,
                self.labels
            )));
        }
        Ok(())
    }

    /// Width of the vector the dense head consumes.
    pub fn head_input_dim(&self) -> usize {
        match self.variant {
            Variant::Bilstm => 2 * self.hidden,
            Variant::Lstm | Variant::Cnn => self.hidden,
        }
    }
}

/// One LSTM gate: input weights (h x b), recurrent weights (h x h), bias (h).
#[derive(Debug, Clone, PartialEq)]
pub struct GateParams {
    pub w_x: Matrix,
    pub w_h: Matrix,
    pub bias: Vec<f64>,
}

impl GateParams {
    fn zeros(hidden: usize, input: usize) -> Self {
        GateParams {
            w_x: Matrix::zeros(hidden, input),
            w_h: Matrix::zeros(hidden, hidden),
            bias: vec![0.0; hidden],
        }
    }
}

/// The four gates of one LSTM direction.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub input: GateParams,
    pub forget: GateParams,
    pub output: GateParams,
    pub cell: GateParams,
}

impl LstmParams {
    fn zeros(hidden: usize, input: usize) -> Self {
        LstmParams {
            input: GateParams::zeros(hidden, input),
            forget: GateParams::zeros(hidden, input),
            output: GateParams::zeros(hidden, input),
            cell: GateParams::zeros(hidden, input),
        }
    }

    pub fn gates(&self) -> [(&'static str, &GateParams); 4] {
        [
            ("input", &self.input),
            ("forget", &self.forget),
            ("output", &self.output),
            ("cell", &self.cell),
        ]
    }

    pub fn gates_mut(&mut self) -> [(&'static str, &mut GateParams); 4] {
        [
            ("input", &mut self.input),
            ("forget", &mut self.forget),
            ("output", &mut self.output),
            ("cell", &mut self.cell),
        ]
    }
}

/// 1-D convolution over the function axis: h filters of width 3 across b
/// input features, flattened to an h x 3b weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvParams {
    pub w: Matrix,
    pub bias: Vec<f64>,
}

/// Dense sigmoid head: W is l x 2h for the BiLSTM, l x h otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams {
    pub w: Matrix,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)] // one Body per model; indirection buys nothing
pub enum Body {
    Bilstm { fwd: LstmParams, bwd: LstmParams },
    Lstm { fwd: LstmParams },
    Cnn { conv: ConvParams },
}

/// All parameters of one classifier instance.
#[derive(Debug, Clone, PartialEq)]
pub struct IntentModel {
    pub config: ModelConfig,
    pub body: Body,
    pub head: DenseParams,
}

impl IntentModel {
    /// Freshly initialized model with seeded uniform Xavier-style weights.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        let mut model = Self::zeroed(config)?;
        let mut rng = SplitMix64::new(seed);
        let init_matrix = |m: &mut Matrix, fan_in: usize, fan_out: usize, rng: &mut SplitMix64| {
            let scale = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for v in m.data_mut() {
                *v = rng.uniform(-scale, scale);
            }
        };
        let (b, h) = (model.config.feature_dim, model.config.hidden);
        match &mut model.body {
            Body::Bilstm { fwd, bwd } => {
                for lstm in [fwd, bwd] {
                    for (_, gate) in lstm.gates_mut() {
                        init_matrix(&mut gate.w_x, b, h, &mut rng);
                        init_matrix(&mut gate.w_h, h, h, &mut rng);
                    }
                    // Forget bias starts open so early gradients flow.
                    gate_fill(&mut lstm.forget.bias, 1.0);
                }
            }
            Body::Lstm { fwd } => {
                for (_, gate) in fwd.gates_mut() {
                    init_matrix(&mut gate.w_x, b, h, &mut rng);
                    init_matrix(&mut gate.w_h, h, h, &mut rng);
                }
                gate_fill(&mut fwd.forget.bias, 1.0);
            }
            Body::Cnn { conv } => {
                init_matrix(&mut conv.w, CNN_KERNEL * b, h, &mut rng);
            }
        }
        let d = model.config.head_input_dim();
        init_matrix(&mut model.head.w, d, model.config.labels, &mut rng);
        Ok(model)
    }

    /// All-zero parameters (useful as a gradient accumulator and in tests).
    pub fn zeroed(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let (b, h, l) = (config.feature_dim, config.hidden, config.labels);
        let body = match config.variant {
            Variant::Bilstm => Body::Bilstm {
                fwd: LstmParams::zeros(h, b),
                bwd: LstmParams::zeros(h, b),
            },
            Variant::Lstm => Body::Lstm {
                fwd: LstmParams::zeros(h, b),
            },
            Variant::Cnn => Body::Cnn {
                conv: ConvParams {
                    w: Matrix::zeros(h, CNN_KERNEL * b),
                    bias: vec![0.0; h],
                },
            },
        };
        let head = DenseParams {
            w: Matrix::zeros(l, config.head_input_dim()),
            bias: vec![0.0; l],
        };
        Ok(IntentModel { config, body, head })
    }

    /// Same shapes, all parameters zero.
    pub fn zeros_like(&self) -> IntentModel {
        Self::zeroed(self.config.clone()).expect("config already validated")
    }

    /// Visit every parameter block as `(name, shape, values)`.
    pub fn for_each_block<'a>(&'a self, mut f: impl FnMut(String, Vec<usize>, &'a [f64])) {
        let visit_lstm = |prefix: &str,
                          lstm: &'a LstmParams,
                          f: &mut dyn FnMut(String, Vec<usize>, &'a [f64])| {
            for (gate_name, gate) in lstm.gates() {
                f(
                    format!("{prefix}.{gate_name}.w_x"),
                    vec![gate.w_x.rows(), gate.w_x.cols()],
                    gate.w_x.data(),
                );
                f(
                    format!("{prefix}.{gate_name}.w_h"),
                    vec![gate.w_h.rows(), gate.w_h.cols()],
                    gate.w_h.data(),
                );
                f(
                    format!("{prefix}.{gate_name}.bias"),
                    vec![gate.bias.len()],
                    &gate.bias,
                );
            }
        };
        match &self.body {
            Body::Bilstm { fwd, bwd } => {
                visit_lstm("fwd", fwd, &mut f);
                visit_lstm("bwd", bwd, &mut f);
            }
            Body::Lstm { fwd } => visit_lstm("fwd", fwd, &mut f),
            Body::Cnn { conv } => {
                f(
                    "conv.w".to_string(),
                    vec![conv.w.rows(), conv.w.cols()],
                    conv.w.data(),
                );
                f("conv.bias".to_string(), vec![conv.bias.len()], &conv.bias);
            }
        }
        f(
            "head.w".to_string(),
            vec![self.head.w.rows(), self.head.w.cols()],
            self.head.w.data(),
        );
        f("head.bias".to_string(), vec![self.head.bias.len()], &self.head.bias);
    }

    /// Visit every parameter block mutably, in the same order as
    /// [`IntentModel::for_each_block`].
    pub fn for_each_block_mut(&mut self, mut f: impl FnMut(String, &mut [f64])) {
        let visit_lstm =
            |prefix: &str, lstm: &mut LstmParams, f: &mut dyn FnMut(String, &mut [f64])| {
                for (gate_name, gate) in lstm.gates_mut() {
                    f(format!("{prefix}.{gate_name}.w_x"), gate.w_x.data_mut());
                    f(format!("{prefix}.{gate_name}.w_h"), gate.w_h.data_mut());
                    f(format!("{prefix}.{gate_name}.bias"), &mut gate.bias);
                }
            };
        match &mut self.body {
            Body::Bilstm { fwd, bwd } => {
                visit_lstm("fwd", fwd, &mut f);
                visit_lstm("bwd", bwd, &mut f);
            }
            Body::Lstm { fwd } => visit_lstm("fwd", fwd, &mut f),
            Body::Cnn { conv } => {
                f("conv.w".to_string(), conv.w.data_mut());
                f("conv.bias".to_string(), &mut conv.bias);
            }
        }
        f("head.w".to_string(), self.head.w.data_mut());
        f("head.bias".to_string(), &mut self.head.bias);
    }

    pub fn param_count(&self) -> usize {
        let mut n = 0;
        self.for_each_block(|_, _, data| n += data.len());
        n
    }

    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        self.for_each_block(|_, _, data| out.extend_from_slice(data));
        out
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::DimMismatch {
                expected: self.param_count(),
                got: flat.len(),
            });
        }
        let mut offset = 0;
        self.for_each_block_mut(|_, data| {
            data.copy_from_slice(&flat[offset..offset + data.len()]);
            offset += data.len();
        });
        Ok(())
    }

    /// self += factor * other, blockwise. Shapes must match.
    pub fn add_scaled(&mut self, other: &IntentModel, factor: f64) {
        let mut other_blocks: Vec<&[f64]> = Vec::new();
        other.for_each_block(|_, _, data| other_blocks.push(data));
        let mut i = 0;
        self.for_each_block_mut(|_, data| {
            for (a, b) in data.iter_mut().zip(other_blocks[i]) {
                *a += factor * b;
            }
            i += 1;
        });
    }

    pub fn variant(&self) -> Variant {
        self.config.variant
    }
}

fn gate_fill(bias: &mut [f64], value: f64) {
    for b in bias {
        *b = value;
    }
}

#[derive(Serialize, Deserialize)]
struct WeightBlock {
    name: String,
    shape: Vec<usize>,
    data: Vec<f64>,
}

/// Versioned weights file.
#[derive(Serialize, Deserialize)]
struct WeightsFile {
    artifact: String,
    version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    config_hash: Option<String>,
    config: ModelConfig,
    blocks: Vec<WeightBlock>,
}

impl IntentModel {
    /// Serialize to the versioned weights JSON.
    pub fn to_json(&self, config_hash: Option<&str>) -> Result<String> {
        let mut blocks = Vec::new();
        self.for_each_block(|name, shape, data| {
            blocks.push(WeightBlock {
                name,
                shape,
                data: data.to_vec(),
            });
        });
        Ok(serde_json::to_string(&WeightsFile {
            artifact: "weights".to_string(),
            version: 1,
            config_hash: config_hash.map(str::to_string),
            config: self.config.clone(),
            blocks,
        })?)
    }

    /// Deserialize from the versioned weights JSON; returns the model and
    /// the recorded config hash, if any.
    pub fn from_json(json: &str) -> Result<(Self, Option<String>)> {
        let file: WeightsFile = serde_json::from_str(json)?;
        if file.artifact != "weights" || file.version != 1 {
            return Err(Error::InvalidConfig(format!(
                "unsupported weights file `{}` v{}",
                file.artifact, file.version
            )));
        }
        let mut model = IntentModel::zeroed(file.config)?;
        let mut remaining: std::collections::HashMap<String, WeightBlock> = file
            .blocks
            .into_iter()
            .map(|b| (b.name.clone(), b))
            .collect();
        let mut error: Option<Error> = None;
        model.for_each_block_mut(|name, data| {
            if error.is_some() {
                return;
            }
            match remaining.remove(&name) {
                Some(block) if block.data.len() == data.len() => {
                    data.copy_from_slice(&block.data);
                }
                Some(block) => {
                    error = Some(Error::DimMismatch {
                        expected: data.len(),
                        got: block.data.len(),
                    });
                }
                None => {
                    error = Some(Error::InvalidConfig(format!(
                        "weights file is missing block `{name}`"
                    )));
                }
            }
        });
        if let Some(e) = error {
            return Err(e);
        }
        if let Some(extra) = remaining.keys().next() {
            return Err(Error::InvalidConfig(format!(
                "weights file has unknown block `{extra}`"
            )));
        }
        Ok((model, file.config_hash))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn head_width_tracks_variant() {
        for (variant, want) in [(Variant::Bilstm, 8), (Variant::Lstm, 4), (Variant::Cnn, 4)] {
            let config = ModelConfig {
                max_functions: 3,
                feature_dim: 5,
                hidden: 4,
                labels: 10,
                variant,
            };
            let model = IntentModel::new(config, 1).unwrap();
            assert_eq!(model.head.w.cols(), want);
            assert_eq!(model.head.w.rows(), 10);
        }
    }

    #[test]
    fn config_rejects_wrong_label_count() {
        let config = ModelConfig {
            labels: 9,
            ..ModelConfig::default()
        };
        assert!(IntentModel::zeroed(config).is_err());
    }

    #[test]
    fn flat_roundtrip_is_exact() {
        let config = ModelConfig {
            max_functions: 3,
            feature_dim: 4,
            hidden: 3,
            labels: 10,
            variant: Variant::Bilstm,
        };
        let model = IntentModel::new(config, 7).unwrap();
        let flat = model.flat_params();
        let mut other = model.zeros_like();
        other.set_flat_params(&flat).unwrap();
        assert_eq!(other, model);
    }

    #[test]
    fn same_seed_same_init() {
        let config = ModelConfig {
            max_functions: 2,
            feature_dim: 3,
            hidden: 2,
            labels: 10,
            variant: Variant::Lstm,
        };
        let a = IntentModel::new(config.clone(), 42).unwrap();
        let b = IntentModel::new(config, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn weights_json_roundtrip_is_bit_exact() {
        for variant in [Variant::Bilstm, Variant::Lstm, Variant::Cnn] {
            let config = ModelConfig {
                max_functions: 4,
                feature_dim: 6,
                hidden: 3,
                labels: 10,
                variant,
            };
            let model = IntentModel::new(config, 3).unwrap();
            let json = model.to_json(Some("deadbeef")).unwrap();
            let (back, hash) = IntentModel::from_json(&json).unwrap();
            assert_eq!(back, model);
            assert_eq!(hash.as_deref(), Some("deadbeef"));
        }
    }

    #[test]
    fn add_scaled_accumulates() {
        let config = ModelConfig {
            max_functions: 2,
            feature_dim: 3,
            hidden: 2,
            labels: 10,
            variant: Variant::Cnn,
        };
        let model = IntentModel::new(config, 9).unwrap();
        let mut acc = model.zeros_like();
        acc.add_scaled(&model, 2.0);
        let expected: Vec<f64> = model.flat_params().iter().map(|v| 2.0 * v).collect();
        assert_eq!(acc.flat_params(), expected);
    }
}
