use ndarray::{s, Array1, Array2, Array3, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::activation::{sigmoid, Activation};
use super::Tensor;
use crate::error::{Error, Result};

/// Topology of one layer. Parameters are held separately by [`Layer`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Dense {
        units: usize,
        activation: Activation,
    },
    Lstm {
        units: usize,
        activation: Activation,
        return_sequences: bool,
    },
    /// Copies a (batch, features) matrix into `times` identical timesteps.
    RepeatVector { times: usize },
}

impl LayerSpec {
    pub fn units(&self) -> Option<usize> {
        match *self {
            LayerSpec::Dense { units, .. } | LayerSpec::Lstm { units, .. } => Some(units),
            LayerSpec::RepeatVector { .. } => None,
        }
    }
}

fn glorot(rng: &mut impl Rng, rows: usize, cols: usize) -> Array2<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-limit..limit))
}

/// Fully connected layer: `y = activation(x · W + b)`, with `W` stored as
/// (inputs, units). Sequences are processed per timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

/// Forward-pass state a layer needs to run backward.
#[derive(Debug, Clone)]
pub(crate) enum Cache {
    Dense {
        input: Array2<f64>,
        output: Array2<f64>,
        seq: Option<(usize, usize)>,
    },
    Lstm(LstmCache),
    Repeat,
}

impl Dense {
    pub fn new(inputs: usize, units: usize, activation: Activation, rng: &mut impl Rng) -> Self {
        Self {
            weights: glorot(rng, inputs, units),
            bias: Array1::zeros(units),
            activation,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.nrows()
    }

    pub fn units(&self) -> usize {
        self.weights.ncols()
    }

    /// Forward on a (batch, inputs) matrix.
    pub fn forward_matrix(&self, x: &ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.inputs() {
            return Err(Error::shape(
                format!("{} input columns", self.inputs()),
                format!("{} columns", x.ncols()),
            ));
        }
        let mut z = x.dot(&self.weights);
        z += &self.bias;
        self.activation.forward_inplace(&mut z);
        Ok(z)
    }

    fn flatten(input: &Tensor) -> (Array2<f64>, Option<(usize, usize)>) {
        match input {
            Tensor::Matrix(m) => (m.clone(), None),
            Tensor::Sequence(s) => {
                let (b, t, f) = s.dim();
                let flat = s
                    .as_standard_layout()
                    .into_owned()
                    .into_shape_with_order((b * t, f))
                    .expect("contiguous");
                (flat, Some((b, t)))
            }
        }
    }

    fn unflatten(m: Array2<f64>, seq: Option<(usize, usize)>) -> Tensor {
        match seq {
            None => Tensor::Matrix(m),
            Some((b, t)) => {
                let f = m.ncols();
                Tensor::Sequence(
                    m.as_standard_layout()
                        .into_owned()
                        .into_shape_with_order((b, t, f))
                        .expect("contiguous"),
                )
            }
        }
    }

    pub(crate) fn forward(&self, input: &Tensor, record: bool) -> Result<(Tensor, Option<Cache>)> {
        let (x, seq) = Self::flatten(input);
        let y = self.forward_matrix(&x.view())?;
        let cache = record.then(|| Cache::Dense {
            input: x,
            output: y.clone(),
            seq,
        });
        Ok((Self::unflatten(y, seq), cache))
    }

    pub(crate) fn backward(&self, cache: &Cache, dy: &Tensor) -> Result<(Tensor, Vec<Vec<f64>>)> {
        let Cache::Dense { input, output, seq } = cache else {
            unreachable!("dense layer given a foreign cache")
        };
        let (dy, _) = Self::flatten(dy);
        let dz = self.activation.backward(output, &dy);
        let dw = input.t().dot(&dz);
        let db = dz.sum_axis(Axis(0));
        let dx = dz.dot(&self.weights.t());
        Ok((
            Self::unflatten(dx, *seq),
            vec![dw.iter().copied().collect(), db.to_vec()],
        ))
    }
}

/// Standard LSTM cell unrolled over time.
///
/// Gate columns are laid out as `[input | forget | candidate | output]`.
/// Gates use the logistic sigmoid; `activation` (normally tanh) is applied
/// to the candidate and to the cell state on output.
#[derive(Debug, Clone, PartialEq)]
pub struct Lstm {
    /// (inputs, 4·units)
    pub input_kernel: Array2<f64>,
    /// (units, 4·units)
    pub recurrent_kernel: Array2<f64>,
    /// 4·units
    pub bias: Array1<f64>,
    pub activation: Activation,
    pub return_sequences: bool,
}

#[derive(Debug, Clone)]
pub(crate) struct LstmStep {
    h_prev: Array2<f64>,
    c_prev: Array2<f64>,
    i: Array2<f64>,
    f: Array2<f64>,
    g: Array2<f64>,
    o: Array2<f64>,
    act_c: Array2<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct LstmCache {
    input: Array3<f64>,
    steps: Vec<LstmStep>,
}

impl Lstm {
    pub fn new(
        inputs: usize,
        units: usize,
        activation: Activation,
        return_sequences: bool,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        if !activation.is_elementwise() {
            return Err(Error::Config("LSTM activation must be elementwise".into()));
        }
        let mut bias = Array1::zeros(4 * units);
        bias.slice_mut(s![units..2 * units]).fill(1.0);
        Ok(Self {
            input_kernel: glorot(rng, inputs, 4 * units),
            recurrent_kernel: glorot(rng, units, 4 * units),
            bias,
            activation,
            return_sequences,
        })
    }

    pub fn inputs(&self) -> usize {
        self.input_kernel.nrows()
    }

    pub fn units(&self) -> usize {
        self.recurrent_kernel.nrows()
    }

    /// `(i, f, g, o, c, act(c))` from the pre-activations `z`.
    fn gates(&self, z: Array2<f64>, c_prev: &ArrayView2<f64>) -> [Array2<f64>; 6] {
        let u = self.units();
        let act = self.activation;
        let i = z.slice(s![.., 0..u]).mapv(sigmoid);
        let f = z.slice(s![.., u..2 * u]).mapv(sigmoid);
        let g = z.slice(s![.., 2 * u..3 * u]).mapv(|v| act.apply_scalar(v));
        let o = z.slice(s![.., 3 * u..4 * u]).mapv(sigmoid);
        let c = &f * c_prev + &i * &g;
        let act_c = c.mapv(|v| act.apply_scalar(v));
        [i, f, g, o, c, act_c]
    }

    /// One timestep: returns `(h_t, c_t)` for a (batch, inputs) slice.
    pub fn step(
        &self,
        x_t: &ArrayView2<f64>,
        h_prev: &ArrayView2<f64>,
        c_prev: &ArrayView2<f64>,
    ) -> Result<(Array2<f64>, Array2<f64>)> {
        let u = self.units();
        if x_t.ncols() != self.inputs() || h_prev.ncols() != u || c_prev.ncols() != u {
            return Err(Error::shape(
                format!("x width {}, state width {u}", self.inputs()),
                format!(
                    "x width {}, h width {}, c width {}",
                    x_t.ncols(),
                    h_prev.ncols(),
                    c_prev.ncols()
                ),
            ));
        }
        let z = x_t.dot(&self.input_kernel) + h_prev.dot(&self.recurrent_kernel) + &self.bias;
        let [_, _, _, o, c, act_c] = self.gates(z, c_prev);
        Ok((&o * &act_c, c))
    }

    pub(crate) fn forward(&self, input: &Tensor, record: bool) -> Result<(Tensor, Option<Cache>)> {
        let Tensor::Sequence(x) = input else {
            return Err(Error::shape("sequence input for LSTM", "matrix"));
        };
        let (b, t_len, f) = x.dim();
        if f != self.inputs() {
            return Err(Error::shape(
                format!("{} input features", self.inputs()),
                format!("{f} features"),
            ));
        }
        let u = self.units();
        let projected = x
            .as_standard_layout()
            .into_owned()
            .into_shape_with_order((b * t_len, f))
            .expect("contiguous")
            .dot(&self.input_kernel)
            .as_standard_layout()
            .into_owned()
            .into_shape_with_order((b, t_len, 4 * u))
            .expect("contiguous");

        let mut h = Array2::<f64>::zeros((b, u));
        let mut c = Array2::<f64>::zeros((b, u));
        let mut outputs = self
            .return_sequences
            .then(|| Array3::<f64>::zeros((b, t_len, u)));
        let mut steps = Vec::with_capacity(if record { t_len } else { 0 });
        for t in 0..t_len {
            let z = &projected.slice(s![.., t, ..]) + &h.dot(&self.recurrent_kernel) + &self.bias;
            let [i, fg, g, o, c_new, act_c] = self.gates(z, &c.view());
            let h_new = &o * &act_c;
            if let Some(out) = outputs.as_mut() {
                out.slice_mut(s![.., t, ..]).assign(&h_new);
            }
            let h_prev = std::mem::replace(&mut h, h_new);
            let c_prev = std::mem::replace(&mut c, c_new);
            if record {
                steps.push(LstmStep {
                    h_prev,
                    c_prev,
                    i,
                    f: fg,
                    g,
                    o,
                    act_c,
                });
            }
        }
        let out = match outputs {
            Some(seq) => Tensor::Sequence(seq),
            None => Tensor::Matrix(h),
        };
        let cache = record.then(|| {
            Cache::Lstm(LstmCache {
                input: x.clone(),
                steps,
            })
        });
        Ok((out, cache))
    }

    pub(crate) fn backward(&self, cache: &Cache, dy: &Tensor) -> Result<(Tensor, Vec<Vec<f64>>)> {
        let Cache::Lstm(cache) = cache else {
            unreachable!("lstm layer given a foreign cache")
        };
        let (b, t_len, f) = cache.input.dim();
        let u = self.units();
        let act = self.activation;

        let mut dz_all = Array3::<f64>::zeros((b, t_len, 4 * u));
        let mut d_recurrent = Array2::<f64>::zeros((u, 4 * u));
        let mut dh_next = Array2::<f64>::zeros((b, u));
        let mut dc_next = Array2::<f64>::zeros((b, u));

        for t in (0..t_len).rev() {
            let st = &cache.steps[t];
            let mut dh = dh_next;
            match (dy, self.return_sequences) {
                (Tensor::Sequence(d), true) => dh += &d.slice(s![.., t, ..]),
                (Tensor::Matrix(d), false) if t == t_len - 1 => dh += d,
                (Tensor::Matrix(_), false) => {}
                _ => return Err(Error::shape("gradient matching LSTM output", "other")),
            }
            let mut dz = dz_all.slice_mut(s![.., t, ..]);
            for r in 0..b {
                for k in 0..u {
                    let (i, fg, g, o) = (st.i[[r, k]], st.f[[r, k]], st.g[[r, k]], st.o[[r, k]]);
                    let ac = st.act_c[[r, k]];
                    let dhv = dh[[r, k]];
                    let d_o = dhv * ac;
                    let dc = dhv * o * act.derivative_from_output(ac) + dc_next[[r, k]];
                    dz[[r, k]] = dc * g * i * (1.0 - i);
                    dz[[r, u + k]] = dc * st.c_prev[[r, k]] * fg * (1.0 - fg);
                    dz[[r, 2 * u + k]] = dc * i * act.derivative_from_output(g);
                    dz[[r, 3 * u + k]] = d_o * o * (1.0 - o);
                    dc_next[[r, k]] = dc * fg;
                }
            }
            d_recurrent += &st.h_prev.t().dot(&dz);
            dh_next = dz.dot(&self.recurrent_kernel.t());
        }

        let dz_flat = dz_all
            .into_shape_with_order((b * t_len, 4 * u))
            .expect("contiguous");
        let x_flat = cache
            .input
            .as_standard_layout()
            .into_owned()
            .into_shape_with_order((b * t_len, f))
            .expect("contiguous");
        let d_input = x_flat.t().dot(&dz_flat);
        let d_bias = dz_flat.sum_axis(Axis(0));
        let dx = dz_flat
            .dot(&self.input_kernel.t())
            .as_standard_layout()
            .into_owned()
            .into_shape_with_order((b, t_len, f))
            .expect("contiguous");
        Ok((
            Tensor::Sequence(dx),
            vec![
                d_input.iter().copied().collect(),
                d_recurrent.iter().copied().collect(),
                d_bias.to_vec(),
            ],
        ))
    }
}

/// A layer with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Dense(Dense),
    Lstm(Lstm),
    RepeatVector { times: usize },
}

impl Layer {
    pub fn spec(&self) -> LayerSpec {
        match self {
            Layer::Dense(d) => LayerSpec::Dense {
                units: d.units(),
                activation: d.activation,
            },
            Layer::Lstm(l) => LayerSpec::Lstm {
                units: l.units(),
                activation: l.activation,
                return_sequences: l.return_sequences,
            },
            Layer::RepeatVector { times } => LayerSpec::RepeatVector { times: *times },
        }
    }

    pub(crate) fn forward(&self, input: &Tensor, record: bool) -> Result<(Tensor, Option<Cache>)> {
        match self {
            Layer::Dense(d) => d.forward(input, record),
            Layer::Lstm(l) => l.forward(input, record),
            Layer::RepeatVector { times } => {
                let Tensor::Matrix(m) = input else {
                    return Err(Error::shape("matrix input for repeat", "sequence"));
                };
                let (b, f) = m.dim();
                let seq = Array3::from_shape_fn((b, *times, f), |(r, _, c)| m[[r, c]]);
                Ok((Tensor::Sequence(seq), record.then_some(Cache::Repeat)))
            }
        }
    }

    pub(crate) fn backward(&self, cache: &Cache, dy: &Tensor) -> Result<(Tensor, Vec<Vec<f64>>)> {
        match self {
            Layer::Dense(d) => d.backward(cache, dy),
            Layer::Lstm(l) => l.backward(cache, dy),
            Layer::RepeatVector { .. } => {
                let Tensor::Sequence(d) = dy else {
                    return Err(Error::shape("sequence gradient for repeat", "matrix"));
                };
                Ok((Tensor::Matrix(d.sum_axis(Axis(1))), Vec::new()))
            }
        }
    }

    pub(crate) fn params(&self) -> Vec<&[f64]> {
        match self {
            Layer::Dense(d) => vec![
                d.weights.as_slice().expect("standard layout"),
                d.bias.as_slice().expect("standard layout"),
            ],
            Layer::Lstm(l) => vec![
                l.input_kernel.as_slice().expect("standard layout"),
                l.recurrent_kernel.as_slice().expect("standard layout"),
                l.bias.as_slice().expect("standard layout"),
            ],
            Layer::RepeatVector { .. } => Vec::new(),
        }
    }

    pub(crate) fn params_mut(&mut self) -> Vec<&mut [f64]> {
        match self {
            Layer::Dense(d) => vec![
                d.weights.as_slice_mut().expect("standard layout"),
                d.bias.as_slice_mut().expect("standard layout"),
            ],
            Layer::Lstm(l) => vec![
                l.input_kernel.as_slice_mut().expect("standard layout"),
                l.recurrent_kernel.as_slice_mut().expect("standard layout"),
                l.bias.as_slice_mut().expect("standard layout"),
            ],
            Layer::RepeatVector { .. } => Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn identity_dense_layer_is_identity() {
        let d = Dense {
            weights: Array2::eye(3),
            bias: Array1::zeros(3),
            activation: Activation::Identity,
        };
        let x = array![[1.0, -2.0, 3.5]];
        assert_eq!(d.forward_matrix(&x.view()).unwrap(), x);
    }

    #[test]
    fn scalar_dense_hand_value() {
        let d = Dense {
            weights: array![[2.0]],
            bias: array![1.0],
            activation: Activation::Identity,
        };
        assert_eq!(
            d.forward_matrix(&array![[3.0]].view()).unwrap(),
            array![[7.0]]
        );
    }

    #[test]
    fn dense_shape_mismatch() {
        let d = Dense::new(3, 2, Activation::Relu, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(d.forward_matrix(&array![[1.0, 2.0]].view()).is_err());
    }

    fn zero_lstm(units: usize, inputs: usize) -> Lstm {
        Lstm {
            input_kernel: Array2::zeros((inputs, 4 * units)),
            recurrent_kernel: Array2::zeros((units, 4 * units)),
            bias: Array1::zeros(4 * units),
            activation: Activation::Tanh,
            return_sequences: false,
        }
    }

    #[test]
    fn zero_network_yields_zero_state() {
        let cell = zero_lstm(3, 2);
        let z = Array2::zeros((1, 3));
        let (h, c) = cell
            .step(&array![[4.0, -7.0]].view(), &z.view(), &z.view())
            .unwrap();
        assert!(h.iter().chain(c.iter()).all(|&v| v == 0.0));
    }

    #[test]
    fn saturated_forget_gate_keeps_cell_state() {
        let mut cell = zero_lstm(1, 1);
        cell.bias[0] = -1e3; // input gate -> 0
        cell.bias[1] = 1e3; // forget gate -> 1
        let c_prev = array![[0.37]];
        let (_, c) = cell
            .step(&array![[2.0]].view(), &array![[0.1]].view(), &c_prev.view())
            .unwrap();
        assert_eq!(c, c_prev);
    }

    #[test]
    fn large_candidate_bias_hand_formula() {
        let mut cell = zero_lstm(1, 1);
        let big = 20.0;
        cell.bias[2] = big;
        let zero = array![[0.0]];
        let (h, c) = cell
            .step(&array![[0.0]].view(), &zero.view(), &zero.view())
            .unwrap();
        // i = f = o = sigmoid(0) = 0.5, g = tanh(big), c_prev = 0
        let expected_c = 0.5 * big.tanh();
        let expected_h = 0.5 * expected_c.tanh();
        assert!((c[[0, 0]] - expected_c).abs() < 1e-15);
        assert!((c[[0, 0]] - 0.5).abs() < 1e-12);
        assert!((h[[0, 0]] - expected_h).abs() < 1e-15);
    }

    #[test]
    fn lstm_rejects_softmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(Lstm::new(2, 2, Activation::Softmax, false, &mut rng).is_err());
    }

    #[test]
    fn forget_bias_initialised_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let l = Lstm::new(2, 3, Activation::Tanh, true, &mut rng).unwrap();
        assert_eq!(
            l.bias.to_vec(),
            vec![0., 0., 0., 1., 1., 1., 0., 0., 0., 0., 0., 0.]
        );
    }
}
