use std::collections::{HashMap, VecDeque};

use log::warn;
use ndarray::{Array1, Array2, ArrayView1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kernel {
    Linear,
    Polynomial {
        #[serde(default = "default_degree")]
        degree: u32,
        /// `None` selects `1 / (d · var(X))`.
        #[serde(default)]
        gamma: Option<f64>,
        #[serde(default)]
        coef0: f64,
    },
    Rbf {
        #[serde(default)]
        gamma: Option<f64>,
    },
    Sigmoid {
        #[serde(default)]
        gamma: Option<f64>,
        #[serde(default)]
        coef0: f64,
    },
}

fn default_degree() -> u32 {
    3
}

impl Kernel {
    pub fn rbf() -> Self {
        Kernel::Rbf { gamma: None }
    }

    pub fn polynomial() -> Self {
        Kernel::Polynomial {
            degree: 3,
            gamma: None,
            coef0: 0.0,
        }
    }

    pub fn sigmoid() -> Self {
        Kernel::Sigmoid {
            gamma: None,
            coef0: 0.0,
        }
    }

    /// Replace an automatic gamma with `1 / (d · var(X))`.
    fn resolve(self, x: &Array2<f64>) -> Self {
        let n = x.len() as f64;
        let mean = x.sum() / n;
        let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let auto = if var > 0.0 {
            1.0 / (x.ncols() as f64 * var)
        } else {
            1.0
        };
        let fill = |g: Option<f64>| Some(g.unwrap_or(auto));
        match self {
            Kernel::Linear => Kernel::Linear,
            Kernel::Polynomial {
                degree,
                gamma,
                coef0,
            } => Kernel::Polynomial {
                degree,
                gamma: fill(gamma),
                coef0,
            },
            Kernel::Rbf { gamma } => Kernel::Rbf { gamma: fill(gamma) },
            Kernel::Sigmoid { gamma, coef0 } => Kernel::Sigmoid {
                gamma: fill(gamma),
                coef0,
            },
        }
    }

    pub fn eval(&self, a: &ArrayView1<f64>, b: &ArrayView1<f64>) -> f64 {
        let g = |gamma: Option<f64>| gamma.unwrap_or(1.0);
        match *self {
            Kernel::Linear => a.dot(b),
            Kernel::Polynomial {
                degree,
                gamma,
                coef0,
            } => (g(gamma) * a.dot(b) + coef0).powi(degree as i32),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum();
                (-g(gamma) * d2).exp()
            }
            Kernel::Sigmoid { gamma, coef0 } => (g(gamma) * a.dot(b) + coef0).tanh(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OcsvmParams {
    pub kernel: Kernel,
    pub nu: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Iteration budget in units of the training-set size.
    #[serde(default = "default_passes")]
    pub max_passes: usize,
}

fn default_tol() -> f64 {
    1e-4
}

fn default_passes() -> usize {
    10_000
}

impl OcsvmParams {
    pub fn new(kernel: Kernel, nu: f64) -> Self {
        Self {
            kernel,
            nu,
            tol: default_tol(),
            max_passes: default_passes(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneClassSvmModel {
    /// Kernel with gamma resolved.
    pub kernel: Kernel,
    pub nu: f64,
    pub support_vectors: Array2<f64>,
    /// Training indices of the support vectors.
    pub support: Vec<usize>,
    /// Dual coefficients, summing to 1 and each at most `1 / (nu · n)`.
    pub alpha: Vec<f64>,
    pub rho: f64,
    pub n_train: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Final maximal KKT violation.
    pub residual: f64,
}

/// Kernel rows computed on demand with a bounded FIFO cache.
struct KernelRows<'a> {
    x: &'a Array2<f64>,
    kernel: Kernel,
    rows: HashMap<usize, Vec<f64>>,
    order: VecDeque<usize>,
    capacity: usize,
}

impl<'a> KernelRows<'a> {
    fn new(x: &'a Array2<f64>, kernel: Kernel) -> Self {
        // Roughly 256 MB of cached rows.
        let capacity = ((256usize << 20) / (8 * x.nrows().max(1))).clamp(2, x.nrows().max(2));
        Self {
            x,
            kernel,
            rows: HashMap::new(),
            order: VecDeque::new(),
            capacity,
        }
    }

    fn row(&mut self, i: usize) -> &[f64] {
        if !self.rows.contains_key(&i) {
            if self.rows.len() >= self.capacity {
                if let Some(old) = self.order.pop_front() {
                    self.rows.remove(&old);
                }
            }
            let xi = self.x.row(i);
            let row: Vec<f64> = (0..self.x.nrows())
                .into_par_iter()
                .map(|j| self.kernel.eval(&xi, &self.x.row(j)))
                .collect();
            self.rows.insert(i, row);
            self.order.push_back(i);
        }
        &self.rows[&i]
    }
}

const TAU: f64 = 1e-12;

/// Solve `min ½ αᵀKα` subject to `0 ≤ α ≤ 1`, `Σα = νn` by SMO with
/// second-order working-set selection.
pub fn ocsvm_fit(train: &Array2<f64>, params: &OcsvmParams) -> Result<OneClassSvmModel> {
    let nu = params.nu;
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(Error::Config(format!("nu must lie in (0, 1], got {nu}")));
    }
    let n = train.nrows();
    if n == 0 {
        return Err(Error::Domain("one-class SVM needs training data".into()));
    }
    let kernel = params.kernel.resolve(train);
    let diag: Vec<f64> = (0..n)
        .map(|i| kernel.eval(&train.row(i), &train.row(i)))
        .collect();
    let mut cache = KernelRows::new(train, kernel);

    let total = nu * n as f64;
    let full = (total.floor() as usize).min(n);
    let mut alpha = vec![0.0; n];
    alpha[..full].iter_mut().for_each(|a| *a = 1.0);
    if full < n {
        alpha[full] = total - full as f64;
    }
    let mut grad = vec![0.0; n];
    for (i, &a) in alpha.iter().enumerate() {
        if a != 0.0 {
            let row = cache.row(i);
            grad.iter_mut().zip(row).for_each(|(g, k)| *g += a * k);
        }
    }

    let max_iter = params.max_passes.saturating_mul(n).max(1);
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    let mut converged = false;
    while iterations < max_iter {
        // i maximises -G over points that can still grow.
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            if alpha[t] < 1.0 && -grad[t] >= gmax {
                gmax = -grad[t];
                i_sel = Some(t);
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        let mut best = f64::INFINITY;
        if let Some(i) = i_sel {
            let qi = cache.row(i).to_vec();
            for t in 0..n {
                if alpha[t] > 0.0 {
                    gmax2 = gmax2.max(grad[t]);
                    let b = gmax + grad[t];
                    if b > 0.0 {
                        let mut a = diag[i] + diag[t] - 2.0 * qi[t];
                        if a <= 0.0 {
                            a = TAU;
                        }
                        let obj = -(b * b) / a;
                        if obj <= best {
                            best = obj;
                            j_sel = Some(t);
                        }
                    }
                }
            }
        }
        residual = gmax + gmax2;
        let (Some(i), Some(j)) = (i_sel, j_sel) else {
            converged = true;
            break;
        };
        if residual < params.tol {
            converged = true;
            break;
        }
        iterations += 1;

        let qi = cache.row(i).to_vec();
        let qj = cache.row(j).to_vec();
        let mut quad = diag[i] + diag[j] - 2.0 * qi[j];
        if quad <= 0.0 {
            quad = TAU;
        }
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let delta = (grad[i] - grad[j]) / quad;
        let sum = old_i + old_j;
        let (mut ai, mut aj) = (old_i - delta, old_j + delta);
        if sum > 1.0 {
            if ai > 1.0 {
                ai = 1.0;
                aj = sum - 1.0;
            }
        } else if aj < 0.0 {
            aj = 0.0;
            ai = sum;
        }
        if sum > 1.0 {
            if aj > 1.0 {
                aj = 1.0;
                ai = sum - 1.0;
            }
        } else if ai < 0.0 {
            ai = 0.0;
            aj = sum;
        }
        alpha[i] = ai;
        alpha[j] = aj;
        let (di, dj) = (ai - old_i, aj - old_j);
        for t in 0..n {
            grad[t] += qi[t] * di + qj[t] * dj;
        }
    }
    if !converged {
        warn!(
            "one-class SVM stopped after {iterations} iterations with KKT residual {residual:.3e}"
        );
    }

    // Offset from free vectors, or the midpoint of the feasible interval.
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free_sum, mut free) = (0.0, 0usize);
    for t in 0..n {
        if alpha[t] >= 1.0 {
            lb = lb.max(grad[t]);
        } else if alpha[t] <= 0.0 {
            ub = ub.min(grad[t]);
        } else {
            free_sum += grad[t];
            free += 1;
        }
    }
    let rho = if free > 0 {
        free_sum / free as f64
    } else if ub.is_finite() && lb.is_finite() {
        0.5 * (ub + lb)
    } else if lb.is_finite() {
        lb
    } else {
        ub
    };

    let support: Vec<usize> = (0..n).filter(|&t| alpha[t] > 0.0).collect();
    let support_vectors = train.select(ndarray::Axis(0), &support);
    Ok(OneClassSvmModel {
        kernel,
        nu,
        support_vectors,
        alpha: support.iter().map(|&t| alpha[t] / total).collect(),
        support,
        rho: rho / total,
        n_train: n,
        iterations,
        converged,
        residual,
    })
}

impl OneClassSvmModel {
    /// `Σ αᵢ K(svᵢ, x) − ρ` per row; negative means anomalous.
    pub fn decision_function(&self, x: &Array2<f64>) -> Result<Vec<f64>> {
        if x.nrows() > 0 && x.ncols() != self.support_vectors.ncols() {
            return Err(Error::shape(
                format!("{} features", self.support_vectors.ncols()),
                format!("{} features", x.ncols()),
            ));
        }
        Ok((0..x.nrows())
            .into_par_iter()
            .map(|r| {
                let xr = x.row(r);
                self.alpha
                    .iter()
                    .zip(self.support_vectors.rows())
                    .map(|(a, sv)| a * self.kernel.eval(&sv, &xr))
                    .sum::<f64>()
                    - self.rho
            })
            .collect())
    }

    pub fn predict(&self, x: &Array2<f64>) -> Result<Vec<u8>> {
        Ok(self
            .decision_function(x)?
            .into_iter()
            .map(|f| u8::from(f < 0.0))
            .collect())
    }

    /// `½ αᵀKα` with the normalised coefficients.
    pub fn dual_objective(&self) -> f64 {
        let sv = &self.support_vectors;
        let mut total = 0.0;
        for (i, ai) in self.alpha.iter().enumerate() {
            for (j, aj) in self.alpha.iter().enumerate() {
                total += ai * aj * self.kernel.eval(&sv.row(i), &sv.row(j));
            }
        }
        0.5 * total
    }

    /// All training coefficients, zero for non-support points.
    pub fn dense_alpha(&self) -> Array1<f64> {
        let mut a = Array1::zeros(self.n_train);
        for (&i, &v) in self.support.iter().zip(&self.alpha) {
            a[i] = v;
        }
        a
    }
}

pub fn ocsvm_predict(model: &OneClassSvmModel, x: &Array2<f64>) -> Result<Vec<u8>> {
    model.predict(x)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use ndarray::array;

    use super::*;

    fn ring(n: usize, r: f64) -> Array2<f64> {
        Array2::from_shape_fn((n, 2), |(i, j)| {
            let t = 2.0 * PI * i as f64 / n as f64;
            if j == 0 {
                r * t.cos()
            } else {
                r * t.sin()
            }
        })
    }

    #[test]
    fn coefficients_are_normalised_and_bounded() {
        let x = Array2::from_shape_fn((30, 2), |(i, j)| ((i * 13 + j * 7) % 17) as f64 / 17.0);
        for nu in [0.1, 0.5, 0.9] {
            let m = ocsvm_fit(&x, &OcsvmParams::new(Kernel::rbf(), nu)).unwrap();
            assert!(m.converged);
            let s: f64 = m.alpha.iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            let cap = 1.0 / (nu * 30.0);
            assert!(m.alpha.iter().all(|&a| a > 0.0 && a <= cap + 1e-15));
            assert!(m.support.len() as f64 >= (nu * 30.0).floor());
        }
    }

    #[test]
    fn identical_points_score_equally_and_others_lower() {
        let x = Array2::from_elem((10, 2), 0.5);
        let m = ocsvm_fit(&x, &OcsvmParams::new(Kernel::rbf(), 0.5)).unwrap();
        let f = m.decision_function(&x).unwrap();
        assert!(f.iter().all(|&v| v == f[0]));
        let g = m.decision_function(&array![[0.9, 0.1]]).unwrap();
        assert!(g[0] < f[0]);
    }

    #[test]
    fn nu_one_makes_every_point_a_bounded_vector() {
        let x = ring(8, 1.0);
        let m = ocsvm_fit(&x, &OcsvmParams::new(Kernel::rbf(), 1.0)).unwrap();
        assert_eq!(m.support.len(), 8);
        assert!(m.alpha.iter().all(|&a| (a - 1.0 / 8.0).abs() < 1e-15));
    }

    #[test]
    fn far_point_is_outside_rbf_support() {
        let x = Array2::from_shape_fn((40, 2), |(i, j)| ((i * 11 + j * 5) % 13) as f64 / 13.0);
        let m = ocsvm_fit(&x, &OcsvmParams::new(Kernel::rbf(), 0.3)).unwrap();
        assert_eq!(m.predict(&array![[50.0, -50.0]]).unwrap(), [1]);
        assert!(m.predict(&array![[1.0, 2.0, 3.0]]).is_err());
    }

    #[test]
    fn free_vectors_sit_on_the_boundary() {
        let x = Array2::from_shape_fn((40, 2), |(i, j)| {
            ((i * 11 + j * 5) % 13) as f64 / 13.0 + 0.01 * i as f64
        });
        let m = ocsvm_fit(&x, &OcsvmParams::new(Kernel::rbf(), 0.4)).unwrap();
        let cap = 1.0 / (0.4 * 40.0);
        let f = m.decision_function(&m.support_vectors).unwrap();
        for (a, v) in m.alpha.iter().zip(&f) {
            if *a < cap * (1.0 - 1e-9) {
                assert!(v.abs() < 1e-4 / (0.4 * 40.0) * 10.0, "free vector f = {v}");
            }
        }
    }

    #[test]
    fn linear_ring_fraction_near_nu() {
        let x = ring(8, 1.0) + 2.0;
        let m = ocsvm_fit(&x, &OcsvmParams::new(Kernel::Linear, 0.6)).unwrap();
        let flagged = m.predict(&x).unwrap().iter().filter(|&&v| v == 1).count() as f64 / 8.0;
        assert!((flagged - 0.6).abs() <= 2.0 / 8.0 + 1e-12, "{flagged}");
    }

    #[test]
    fn nu_out_of_range() {
        let x = ring(4, 1.0);
        assert!(ocsvm_fit(&x, &OcsvmParams::new(Kernel::Linear, 0.0)).is_err());
        assert!(ocsvm_fit(&x, &OcsvmParams::new(Kernel::Linear, 1.2)).is_err());
    }
}
