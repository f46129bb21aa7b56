//! Two-hidden-layer MLP for binary classification with BCE-with-logits loss
//! and the Welsch penalty.
//!
//! Gradients come from manual reverse-mode backprop. The Hessian-vector
//! product is exact: a forward-mode tangent is propagated through both the
//! forward and the backward pass (R-operator), so it costs about as much as
//! one extra gradient.

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::{check_batch, check_dim, sigmoid, softplus, welsch_grad, welsch_hvp, welsch_value};
use super::{Dataset, MiniBatch, Problem};
use crate::{ParamVector, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Sigmoid,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => sigmoid(z),
        }
    }

    /// First derivative expressed through the activation value `a`.
    fn deriv(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Sigmoid => a * (1.0 - a),
        }
    }

    /// Tangent of the derivative: `R[phi'(z)] = phi''(z) R[z]`, expressed
    /// through `a` and `Ra = phi'(z) Rz`.
    fn deriv_tangent(self, a: f64, ra: f64) -> f64 {
        match self {
            Activation::Tanh => -2.0 * a * ra,
            Activation::Sigmoid => (1.0 - 2.0 * a) * ra,
        }
    }
}

/// Layer widths `[input, h1, h2, 1]` with one scalar logit output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpArchitecture {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

impl MlpArchitecture {
    pub fn new(input_dim: usize, hidden: Vec<usize>, activation: Activation) -> Self {
        MlpArchitecture {
            input_dim,
            hidden,
            activation,
        }
    }

    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.input_dim];
        w.extend_from_slice(&self.hidden);
        w.push(1);
        w
    }

    /// Exact flattened count of weights plus biases.
    pub fn param_count(&self) -> usize {
        self.widths()
            .windows(2)
            .map(|w| w[0] * w[1] + w[1])
            .sum()
    }
}

#[derive(Debug, Clone)]
pub struct MlpWelsch {
    pub arch: MlpArchitecture,
    pub data: Dataset,
    pub lambda: f64,
}

struct Layers {
    weights: Vec<Array2<f64>>,
    biases: Vec<Array1<f64>>,
}

impl MlpWelsch {
    pub fn new(arch: MlpArchitecture, data: Dataset, lambda: f64) -> Result<Self> {
        if arch.input_dim != data.n_features() {
            return Err(crate::Error::DimMismatch {
                expected: data.n_features(),
                got: arch.input_dim,
            });
        }
        Ok(MlpWelsch { arch, data, lambda })
    }

    fn unpack(&self, x: &ParamVector) -> Layers {
        let widths = self.arch.widths();
        let mut weights = Vec::with_capacity(widths.len() - 1);
        let mut biases = Vec::with_capacity(widths.len() - 1);
        let mut off = 0usize;
        let xs = x.as_slice().expect("contiguous params");
        for w in widths.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let wmat =
                Array2::from_shape_vec((fan_out, fan_in), xs[off..off + fan_in * fan_out].to_vec())
                    .unwrap();
            off += fan_in * fan_out;
            let b = Array1::from_vec(xs[off..off + fan_out].to_vec());
            off += fan_out;
            weights.push(wmat);
            biases.push(b);
        }
        Layers { weights, biases }
    }

    fn pack(&self, weights: &[Array2<f64>], biases: &[Array1<f64>]) -> ParamVector {
        let mut out = Vec::with_capacity(self.arch.param_count());
        for (w, b) in weights.iter().zip(biases) {
            out.extend(w.iter().copied());
            out.extend(b.iter().copied());
        }
        Array1::from_vec(out)
    }

    fn batch_inputs(&self, batch: &MiniBatch) -> (Array2<f64>, Array1<f64>) {
        let b = batch.size();
        let d = self.data.n_features();
        let mut a0 = Array2::zeros((b, d));
        let mut y = Array1::zeros(b);
        for (r, &i) in batch.indices.iter().enumerate() {
            a0.row_mut(r).assign(&self.data.features.row(i));
            y[r] = self.data.labels[i];
        }
        (a0, y)
    }

    /// Forward pass; returns per-layer activations `a_0..a_L` where `a_L`
    /// holds raw logits (identity output layer).
    fn forward(&self, layers: &Layers, a0: Array2<f64>) -> Vec<Array2<f64>> {
        let n_layers = layers.weights.len();
        let mut acts = vec![a0];
        for l in 0..n_layers {
            let mut z = acts[l].dot(&layers.weights[l].t());
            z += &layers.biases[l];
            if l + 1 < n_layers {
                z.mapv_inplace(|t| self.arch.activation.apply(t));
            }
            acts.push(z);
        }
        acts
    }
}

impl Problem for MlpWelsch {
    fn dim(&self) -> usize {
        self.arch.param_count()
    }

    fn n_samples(&self) -> usize {
        self.data.n_samples()
    }

    fn value_grad(&self, x: &ParamVector, batch: &MiniBatch) -> Result<(f64, ParamVector)> {
        check_dim(self.dim(), x.len())?;
        check_batch(batch, self.n_samples())?;
        let layers = self.unpack(x);
        let (a0, y) = self.batch_inputs(batch);
        let bsz = batch.size() as f64;
        let acts = self.forward(&layers, a0);
        let n_layers = layers.weights.len();
        let logits = acts[n_layers].column(0);

        let mut value = 0.0;
        // delta at the logit layer: d softplus(-y z)/dz = -y * sigmoid(-y z)
        let mut delta = Array2::zeros((batch.size(), 1));
        for (r, (&z, &yi)) in logits.iter().zip(y.iter()).enumerate() {
            value += softplus(-yi * z);
            delta[[r, 0]] = -yi * sigmoid(-yi * z);
        }
        value = value / bsz + welsch_value(x, self.lambda);

        let mut grad_w: Vec<Array2<f64>> = Vec::with_capacity(n_layers);
        let mut grad_b: Vec<Array1<f64>> = Vec::with_capacity(n_layers);
        for l in (0..n_layers).rev() {
            grad_w.push(delta.t().dot(&acts[l]) / bsz);
            grad_b.push(delta.sum_axis(Axis(0)) / bsz);
            if l > 0 {
                let mut up = delta.dot(&layers.weights[l]);
                for (u, &a) in up.iter_mut().zip(acts[l].iter()) {
                    *u *= self.arch.activation.deriv(a);
                }
                delta = up;
            }
        }
        grad_w.reverse();
        grad_b.reverse();
        let grad = self.pack(&grad_w, &grad_b) + welsch_grad(x, self.lambda);
        Ok((value, grad))
    }

    fn hvp(&self, x: &ParamVector, v: &ParamVector, batch: &MiniBatch) -> Result<ParamVector> {
        check_dim(self.dim(), x.len())?;
        check_dim(self.dim(), v.len())?;
        check_batch(batch, self.n_samples())?;
        let layers = self.unpack(x);
        let tangent = self.unpack(v);
        let (a0, y) = self.batch_inputs(batch);
        let bsz = batch.size() as f64;
        let n_layers = layers.weights.len();
        let act = self.arch.activation;

        // forward pass with tangents: R[a_0] = 0
        let acts = self.forward(&layers, a0);
        let mut r_acts: Vec<Array2<f64>> = vec![Array2::zeros(acts[0].raw_dim())];
        for l in 0..n_layers {
            let mut rz = acts[l].dot(&tangent.weights[l].t()) + r_acts[l].dot(&layers.weights[l].t());
            rz += &tangent.biases[l];
            if l + 1 < n_layers {
                for (r, &a) in rz.iter_mut().zip(acts[l + 1].iter()) {
                    *r *= act.deriv(a);
                }
            }
            r_acts.push(rz);
        }

        // seed: delta_L = -y s, R[delta_L] = s(1-s) R[z_L], s = sigmoid(-y z)
        let logits = acts[n_layers].column(0);
        let mut delta = Array2::zeros((batch.size(), 1));
        let mut r_delta = Array2::zeros((batch.size(), 1));
        for (r, (&z, &yi)) in logits.iter().zip(y.iter()).enumerate() {
            let s = sigmoid(-yi * z);
            delta[[r, 0]] = -yi * s;
            r_delta[[r, 0]] = s * (1.0 - s) * r_acts[n_layers][[r, 0]];
        }

        let mut hw: Vec<Array2<f64>> = Vec::with_capacity(n_layers);
        let mut hb: Vec<Array1<f64>> = Vec::with_capacity(n_layers);
        for l in (0..n_layers).rev() {
            hw.push((r_delta.t().dot(&acts[l]) + delta.t().dot(&r_acts[l])) / bsz);
            hb.push(r_delta.sum_axis(Axis(0)) / bsz);
            if l > 0 {
                let up = delta.dot(&layers.weights[l]);
                let r_up = delta.dot(&tangent.weights[l]) + r_delta.dot(&layers.weights[l]);
                let mut next_delta = Array2::zeros(up.raw_dim());
                let mut next_r_delta = Array2::zeros(up.raw_dim());
                for (idx, ((&u, &ru), (&a, &ra))) in up
                    .iter()
                    .zip(r_up.iter())
                    .zip(acts[l].iter().zip(r_acts[l].iter()))
                    .enumerate()
                {
                    let row = idx / up.ncols();
                    let col = idx % up.ncols();
                    next_delta[[row, col]] = u * act.deriv(a);
                    next_r_delta[[row, col]] = ru * act.deriv(a) + u * act.deriv_tangent(a, ra);
                }
                delta = next_delta;
                r_delta = next_r_delta;
            }
        }
        hw.reverse();
        hb.reverse();
        Ok(self.pack(&hw, &hb) + welsch_hvp(x, v, self.lambda))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn toy() -> MlpWelsch {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let data = Dataset::synthesize(&mut rng, 12, 4, 0.1);
        let arch = MlpArchitecture::new(4, vec![5, 3], Activation::Tanh);
        MlpWelsch::new(arch, data, 0.01).unwrap()
    }

    fn random_params(p: &MlpWelsch, seed: u64) -> ParamVector {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let n = StandardNormal;
        Array1::from_vec((0..p.dim()).map(|_| {
            let v: f64 = n.sample(&mut rng);
            0.5 * v
        }).collect())
    }

    #[test]
    fn param_count_exact() {
        let arch = MlpArchitecture::new(60, vec![32, 16], Activation::Tanh);
        assert_eq!(arch.param_count(), 60 * 32 + 32 + 32 * 16 + 16 + 16 + 1);
    }

    #[test]
    fn zero_params_give_log2() {
        let p = toy();
        let x = Array1::zeros(p.dim());
        let (v, _) = p.full_value_grad(&x).unwrap();
        assert!((v - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn grad_matches_fd() {
        let p = toy();
        let x = random_params(&p, 3);
        let batch = MiniBatch::full(p.n_samples());
        let (_, g) = p.value_grad(&x, &batch).unwrap();
        let eps = 1e-6;
        for j in (0..p.dim()).step_by(7) {
            let mut xp = x.clone();
            xp[j] += eps;
            let mut xm = x.clone();
            xm[j] -= eps;
            let fd = (p.value(&xp, &batch).unwrap() - p.value(&xm, &batch).unwrap()) / (2.0 * eps);
            assert!(
                (g[j] - fd).abs() < 1e-5 * (1.0 + fd.abs()),
                "coord {j}: {} vs {fd}",
                g[j]
            );
        }
    }

    #[test]
    fn hvp_matches_fd_of_grad() {
        let p = toy();
        let x = random_params(&p, 5);
        let v = random_params(&p, 6);
        let batch = MiniBatch::full(p.n_samples());
        let h = p.hvp(&x, &v, &batch).unwrap();
        let eps = 1e-5;
        let (_, gp) = p.value_grad(&(&x + &(eps * &v)), &batch).unwrap();
        let (_, gm) = p.value_grad(&(&x - &(eps * &v)), &batch).unwrap();
        let fd = (&gp - &gm) / (2.0 * eps);
        let scale = fd.iter().fold(0.0_f64, |a, b| a.max(b.abs())).max(1e-12);
        for (a, b) in h.iter().zip(fd.iter()) {
            assert!((a - b).abs() < 1e-4 * scale, "{a} vs {b}");
        }
    }

    #[test]
    fn hvp_symmetric() {
        let p = toy();
        let x = random_params(&p, 8);
        let u = random_params(&p, 9);
        let v = random_params(&p, 10);
        let batch = MiniBatch::full(p.n_samples());
        let hu = p.hvp(&x, &u, &batch).unwrap();
        let hv = p.hvp(&x, &v, &batch).unwrap();
        let a = u.dot(&hv);
        let b = v.dot(&hu);
        assert!((a - b).abs() < 1e-8 * (1.0 + a.abs()), "{a} vs {b}");
    }

    #[test]
    fn hvp_zero_direction() {
        let p = toy();
        let x = random_params(&p, 2);
        let v = Array1::zeros(p.dim());
        let h = p.hvp(&x, &v, &MiniBatch::full(p.n_samples())).unwrap();
        assert!(h.iter().all(|&t| t == 0.0));
    }

    #[test]
    fn duplicated_batch_equals_single() {
        let mut p = toy();
        p.lambda = 0.0;
        let x = random_params(&p, 4);
        let single = MiniBatch { indices: vec![3] };
        let dup = MiniBatch {
            indices: vec![3, 3, 3],
        };
        let (v1, g1) = p.value_grad(&x, &single).unwrap();
        let (v2, g2) = p.value_grad(&x, &dup).unwrap();
        assert!((v1 - v2).abs() < 1e-15);
        for (a, b) in g1.iter().zip(g2.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn dim_mismatch_rejected() {
        let p = toy();
        assert!(p.value_grad(&array![1.0], &MiniBatch::full(1)).is_err());
        let x = Array1::zeros(p.dim());
        assert!(p.hvp(&x, &array![1.0], &MiniBatch::full(1)).is_err());
    }
}
