//! Fully connected networks with analytic backpropagation, Adam, a
//! polynomial learning-rate schedule and Polyak target updates.
//!
//! Parameters live in one flat vector. Layer `l` contributes its weight
//! matrix (`out x in`, row-major) followed by its bias vector.

mod adam;
mod checkpoint;

pub use adam::{soft_update, AdamState, LrSchedule};
pub use checkpoint::{read_net, write_net, NetCheckpoint};

use ndarray::{s, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
}

impl std::fmt::Display for Activation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
        })
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::InvalidArgument(format!("unknown activation `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutputHead {
    /// Single linear output unit.
    Scalar,
    /// Outputs split into `groups` equal contiguous blocks, each mapped to
    /// `scale * softmax(block)`.
    SoftmaxScaled { scale: f64, groups: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetSpec {
    pub layer_sizes: Vec<usize>,
    pub hidden_activation: Activation,
    pub head: OutputHead,
}

impl NetSpec {
    pub fn new(
        input: usize,
        hidden: &[usize],
        output: usize,
        hidden_activation: Activation,
        head: OutputHead,
    ) -> Result<Self> {
        let mut layer_sizes = Vec::with_capacity(hidden.len() + 2);
        layer_sizes.push(input);
        layer_sizes.extend_from_slice(hidden);
        layer_sizes.push(output);
        let spec = Self {
            layer_sizes,
            hidden_activation,
            head,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 3 {
            return Err(Error::InvalidArgument(
                "a network needs at least one hidden layer".into(),
            ));
        }
        if self.layer_sizes.contains(&0) {
            return Err(Error::InvalidArgument("layer sizes must be positive".into()));
        }
        let out = self.output_dim();
        match self.head {
            OutputHead::Scalar if out != 1 => Err(Error::InvalidArgument(format!(
                "scalar head needs one output unit, got {out}"
            ))),
            OutputHead::SoftmaxScaled { scale, groups } => {
                if groups == 0 || out % groups != 0 {
                    Err(Error::InvalidArgument(format!(
                        "{out} outputs cannot be split into {groups} groups"
                    )))
                } else if !(scale.is_finite() && scale > 0.0) {
                    Err(Error::InvalidArgument(format!("invalid head scale {scale}")))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().expect("validated")
    }

    pub fn num_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn num_params(&self) -> usize {
        self.layer_sizes
            .windows(2)
            .map(|w| w[0] * w[1] + w[1])
            .sum()
    }

    /// Offsets of the weight matrix and bias vector of every layer.
    fn offsets(&self) -> Vec<(usize, usize, usize, usize)> {
        let mut off = 0;
        self.layer_sizes
            .windows(2)
            .map(|w| {
                let (inp, out) = (w[0], w[1]);
                let entry = (off, off + inp * out, inp, out);
                off += inp * out + out;
                entry
            })
            .collect()
    }
}

/// `scale * softmax` applied independently to `groups` contiguous blocks,
/// stabilized by subtracting each block's maximum.
pub fn softmax_scaled_head(z: &[f64], scale: f64, groups: usize) -> Vec<f64> {
    let mut out = z.to_vec();
    softmax_scaled_in_place(&mut out, scale, groups);
    out
}

fn softmax_scaled_in_place(z: &mut [f64], scale: f64, groups: usize) {
    let width = z.len() / groups;
    for block in z.chunks_mut(width) {
        let max = block.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for x in block.iter_mut() {
            *x = (*x - max).exp();
            total += *x;
        }
        for x in block.iter_mut() {
            *x = scale * *x / total;
        }
    }
}

/// Activations recorded by [`DenseNet::forward`] for one backward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    /// Input of every layer; entry 0 is the network input.
    inputs: Vec<Array2<f64>>,
    pub output: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    spec: NetSpec,
    params: Vec<f64>,
}

impl DenseNet {
    /// Weights and biases drawn uniformly from `±1/sqrt(fan_in)`.
    pub fn new<R: Rng + ?Sized>(spec: NetSpec, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let mut params = Vec::with_capacity(spec.num_params());
        for w in spec.layer_sizes.windows(2) {
            let bound = 1.0 / (w[0] as f64).sqrt();
            for _ in 0..w[0] * w[1] + w[1] {
                params.push(rng.random_range(-bound..=bound));
            }
        }
        Ok(Self { spec, params })
    }

    pub fn zeros(spec: NetSpec) -> Result<Self> {
        spec.validate()?;
        let params = vec![0.0; spec.num_params()];
        Ok(Self { spec, params })
    }

    pub fn from_params(spec: NetSpec, params: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        check_len("network parameters", spec.num_params(), params.len())?;
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("network parameters"));
        }
        Ok(Self { spec, params })
    }

    pub fn spec(&self) -> &NetSpec {
        &self.spec
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        check_len("network parameters", self.params.len(), params.len())?;
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("network parameters"));
        }
        self.params.copy_from_slice(params);
        Ok(())
    }

    /// Mutable access for optimizers, which keep values finite.
    pub(crate) fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn layer(&self, off: (usize, usize, usize, usize)) -> (ArrayView2<'_, f64>, ArrayView1<'_, f64>) {
        let (w, b, inp, out) = off;
        let weights = ArrayView2::from_shape((out, inp), &self.params[w..w + inp * out])
            .expect("layout matches spec");
        let bias = ArrayView1::from(&self.params[b..b + out]);
        (weights, bias)
    }

    /// Evaluates a batch (one sample per row).
    pub fn forward(&self, input: ArrayView2<'_, f64>) -> Result<Forward> {
        check_len("network input", self.spec.input_dim(), input.ncols())?;
        if input.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("network input"));
        }
        let offsets = self.spec.offsets();
        let last = offsets.len() - 1;
        let mut inputs = Vec::with_capacity(offsets.len());
        inputs.push(input.as_standard_layout().into_owned());
        let mut output = Array2::zeros((0, 0));
        for (l, &off) in offsets.iter().enumerate() {
            let (w, b) = self.layer(off);
            let mut z = inputs[l].dot(&w.t()).as_standard_layout().into_owned();
            z += &b;
            if l < last {
                match self.spec.hidden_activation {
                    Activation::Relu => z.mapv_inplace(|v| v.max(0.0)),
                    Activation::Tanh => z.mapv_inplace(f64::tanh),
                }
                inputs.push(z);
            } else {
                if let OutputHead::SoftmaxScaled { scale, groups } = self.spec.head {
                    for mut row in z.rows_mut() {
                        let row = row.as_slice_mut().expect("standard layout");
                        softmax_scaled_in_place(row, scale, groups);
                    }
                }
                output = z;
            }
        }
        Ok(Forward { inputs, output })
    }

    pub fn forward_one(&self, input: &[f64]) -> Result<Vec<f64>> {
        let view = ArrayView2::from_shape((1, input.len()), input).expect("row vector");
        Ok(self.forward(view)?.output.row(0).to_vec())
    }

    /// Backpropagates `upstream` (gradient of a scalar objective with respect
    /// to every output, one row per sample). Returns parameter gradients
    /// summed over the batch and the per-sample input gradients.
    pub fn backward(
        &self,
        fwd: &Forward,
        upstream: ArrayView2<'_, f64>,
    ) -> Result<(Vec<f64>, Array2<f64>)> {
        if upstream.dim() != fwd.output.dim() {
            return Err(Error::DimensionMismatch {
                context: "upstream gradient",
                expected: fwd.output.len(),
                actual: upstream.len(),
            });
        }
        let mut delta = upstream.to_owned();
        if let OutputHead::SoftmaxScaled { scale, groups } = self.spec.head {
            let width = self.spec.output_dim() / groups;
            for (mut d, y) in delta.rows_mut().into_iter().zip(fwd.output.rows()) {
                for g in 0..groups {
                    let range = g * width..(g + 1) * width;
                    let yb = y.slice(s![range.clone()]);
                    let mut db = d.slice_mut(s![range]);
                    let dot = db.dot(&yb) / scale;
                    db.zip_mut_with(&yb, |dv, &yv| *dv = yv * (*dv - dot));
                }
            }
        }
        let offsets = self.spec.offsets();
        let mut grads = vec![0.0; self.params.len()];
        for (l, &off) in offsets.iter().enumerate().rev() {
            let (w, _) = self.layer(off);
            let (wo, bo, inp, out) = off;
            let dw = delta.t().dot(&fwd.inputs[l]);
            for (g, &v) in grads[wo..wo + inp * out].iter_mut().zip(dw.iter()) {
                *g = v;
            }
            for (g, v) in grads[bo..bo + out].iter_mut().zip(delta.sum_axis(Axis(0))) {
                *g = v;
            }
            let mut below = delta.dot(&w);
            if l == 0 {
                return Ok((grads, below));
            }
            let h = &fwd.inputs[l];
            match self.spec.hidden_activation {
                Activation::Relu => below.zip_mut_with(h, |d, &a| {
                    if a <= 0.0 {
                        *d = 0.0
                    }
                }),
                Activation::Tanh => below.zip_mut_with(h, |d, &a| *d *= 1.0 - a * a),
            }
            delta = below;
        }
        unreachable!("networks have at least one layer")
    }
}
