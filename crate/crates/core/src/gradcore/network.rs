use ndarray::{Array1, Array2, Axis};

use super::activation::Activation;

/// An MLP with its effective (already normalized) weights.
///
/// Hidden layers apply `activation`; the last layer is linear with a single
/// output. All batch methods take inputs as `B x input_dim` matrices.
#[derive(Debug, Clone)]
pub struct Network {
    pub(crate) weights: Vec<Array2<f64>>,
    pub(crate) biases: Vec<Array1<f64>>,
    pub(crate) activation: Activation,
}

/// Intermediate values of a forward pass, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input to every layer (`inputs[0]` is the batch itself).
    inputs: Vec<Array2<f64>>,
    /// `act'(h) * dropout_mask` for each hidden layer.
    d1: Vec<Array2<f64>>,
    /// `act''(h) * dropout_mask` for each hidden layer.
    d2: Vec<Array2<f64>>,
    pub logits: Array1<f64>,
}

/// Forward-mode tangent of a batch along input directions `V`.
#[derive(Debug, Clone)]
pub struct TangentCache {
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
    /// Directional derivative of each logit: `grad f(x_b) . v_b`.
    pub out: Array1<f64>,
}

/// Gradients with respect to the effective weights and biases of each layer.
pub type LayerGrads = Vec<(Array2<f64>, Array1<f64>)>;

impl Network {
    pub fn input_dim(&self) -> usize {
        self.weights[0].ncols()
    }

    pub fn depth(&self) -> usize {
        self.weights.len()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weights(&self) -> &[Array2<f64>] {
        &self.weights
    }

    fn hidden(&self) -> usize {
        self.weights.len() - 1
    }

    /// Logits for a batch, inference mode.
    pub fn logits(&self, x: &Array2<f64>) -> Array1<f64> {
        let act = self.activation;
        let mut h = x.clone();
        for l in 0..self.hidden() {
            let mut pre = h.dot(&self.weights[l].t());
            pre += &self.biases[l];
            pre.mapv_inplace(|v| act.value(v));
            h = pre;
        }
        let last = self.hidden();
        let mut out = h.dot(&self.weights[last].t());
        out += &self.biases[last];
        out.column(0).to_owned()
    }

    pub fn logit(&self, x: &[f64]) -> f64 {
        let xs = Array2::from_shape_vec((1, x.len()), x.to_vec()).expect("row vector");
        self.logits(&xs)[0]
    }

    /// Forward pass with caches. `masks`, if given, holds one dropout mask per
    /// hidden layer (entries 0 or 1/(1-p)).
    pub fn forward(&self, x: Array2<f64>, masks: Option<&[Array2<f64>]>) -> ForwardCache {
        let act = self.activation;
        let n_hidden = self.hidden();
        let mut inputs = Vec::with_capacity(self.depth());
        let mut d1 = Vec::with_capacity(n_hidden);
        let mut d2 = Vec::with_capacity(n_hidden);
        inputs.push(x);
        for l in 0..n_hidden {
            let mut pre = inputs[l].dot(&self.weights[l].t());
            pre += &self.biases[l];
            let mut first = pre.mapv(|v| act.first(v));
            let mut second = pre.mapv(|v| act.second(v));
            let mut post = pre.mapv(|v| act.value(v));
            if let Some(m) = masks {
                first *= &m[l];
                second *= &m[l];
                post *= &m[l];
            }
            d1.push(first);
            d2.push(second);
            inputs.push(post);
        }
        let mut out = inputs[n_hidden].dot(&self.weights[n_hidden].t());
        out += &self.biases[n_hidden];
        ForwardCache { inputs, d1, d2, logits: out.column(0).to_owned() }
    }

    /// Jacobian-vector products of every logit along the rows of `v`.
    pub fn tangent(&self, cache: &ForwardCache, v: Array2<f64>) -> TangentCache {
        let n_hidden = self.hidden();
        let mut inputs = Vec::with_capacity(self.depth());
        let mut pre = Vec::with_capacity(n_hidden);
        inputs.push(v);
        for l in 0..n_hidden {
            let h_dot = inputs[l].dot(&self.weights[l].t());
            let a_dot = &h_dot * &cache.d1[l];
            pre.push(h_dot);
            inputs.push(a_dot);
        }
        let out = inputs[n_hidden].dot(&self.weights[n_hidden].t());
        TangentCache { inputs, pre, out: out.column(0).to_owned() }
    }

    /// Reverse pass.
    ///
    /// `dlogits` is the loss derivative with respect to each logit; each
    /// `(tangent, dout)` pair contributes the derivative of the loss with
    /// respect to that tangent's outputs (second-order terms through the
    /// activation are included). Returns effective-weight gradients and,
    /// if requested, the gradient with respect to the batch input.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        dlogits: &Array1<f64>,
        tangents: &[(&TangentCache, &Array1<f64>)],
        want_input: bool,
    ) -> (LayerGrads, Option<Array2<f64>>) {
        let n_hidden = self.hidden();
        let mut grads: LayerGrads = self
            .weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| (Array2::zeros(w.raw_dim()), Array1::zeros(b.raw_dim())))
            .collect();
        // Extra pre-activation adjoints produced by the tangent passes.
        let mut extra: Vec<Option<Array2<f64>>> = vec![None; n_hidden];

        for (tc, dout) in tangents {
            let col = dout.view().insert_axis(Axis(1));
            grads[n_hidden].0 += &col.t().dot(&tc.inputs[n_hidden]);
            let mut adj = col.dot(&self.weights[n_hidden]);
            for l in (0..n_hidden).rev() {
                let term = &adj * &cache.d2[l] * &tc.pre[l];
                match &mut extra[l] {
                    Some(e) => *e += &term,
                    slot @ None => *slot = Some(term),
                }
                let h_adj = &adj * &cache.d1[l];
                grads[l].0 += &h_adj.t().dot(&tc.inputs[l]);
                if l > 0 {
                    adj = h_adj.dot(&self.weights[l]);
                }
            }
        }

        let col = dlogits.view().insert_axis(Axis(1));
        grads[n_hidden].0 += &col.t().dot(&cache.inputs[n_hidden]);
        grads[n_hidden].1[0] += dlogits.sum();
        let mut adj = col.dot(&self.weights[n_hidden]);
        for l in (0..n_hidden).rev() {
            let mut h_adj = &adj * &cache.d1[l];
            if let Some(e) = &extra[l] {
                h_adj += e;
            }
            grads[l].0 += &h_adj.t().dot(&cache.inputs[l]);
            grads[l].1 += &h_adj.sum_axis(Axis(0));
            adj = h_adj.dot(&self.weights[l]);
        }
        (grads, want_input.then_some(adj))
    }

    /// Reverse pass for the input only; skips all parameter gradients.
    pub fn input_adjoint(&self, cache: &ForwardCache, dlogits: &Array1<f64>) -> Array2<f64> {
        let n_hidden = self.hidden();
        let mut adj = dlogits.view().insert_axis(Axis(1)).dot(&self.weights[n_hidden]);
        for l in (0..n_hidden).rev() {
            adj *= &cache.d1[l];
            adj = adj.dot(&self.weights[l]);
        }
        adj
    }

    /// Logit and its gradient for a single flattened input.
    pub fn input_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let xs = Array2::from_shape_vec((1, x.len()), x.to_vec()).expect("row vector");
        let cache = self.forward(xs, None);
        let g = self.input_adjoint(&cache, &Array1::ones(1));
        (cache.logits[0], g.into_raw_vec_and_offset().0)
    }

    /// Input gradients for a batch (one row per sample).
    pub fn input_gradients(&self, x: Array2<f64>) -> (Array1<f64>, Array2<f64>) {
        let b = x.nrows();
        let cache = self.forward(x, None);
        let g = self.input_adjoint(&cache, &Array1::ones(b));
        (cache.logits.clone(), g)
    }

    /// Directional derivative `grad f(x) . v` for a single input.
    pub fn jvp(&self, x: &[f64], v: &[f64]) -> f64 {
        let xs = Array2::from_shape_vec((1, x.len()), x.to_vec()).expect("row vector");
        let vs = Array2::from_shape_vec((1, v.len()), v.to_vec()).expect("row vector");
        let cache = self.forward(xs, None);
        self.tangent(&cache, vs).out[0]
    }
}
