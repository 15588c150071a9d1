use ndarray::{Array1, Array2};

fn norm(v: &Array1<f64>) -> f64 {
    v.dot(v).sqrt()
}

/// Power iteration for the largest singular value of `w`.
///
/// `u` is the left iterate (length = rows). Returns the estimate and the
/// updated, unit-norm left iterate. A zero matrix yields `(0, u)`.
pub fn spectral_norm_estimate(w: &Array2<f64>, iters: usize, u: &Array1<f64>) -> (f64, Array1<f64>) {
    assert!(iters >= 1, "power iteration needs at least one step");
    let mut left = u.clone();
    let n = norm(&left);
    if n > 0.0 {
        left /= n;
    }
    for _ in 0..iters {
        let mut right = w.t().dot(&left);
        let rn = norm(&right);
        if rn == 0.0 {
            return (0.0, u.clone());
        }
        right /= rn;
        let mut next = w.dot(&right);
        let ln = norm(&next);
        if ln == 0.0 {
            return (0.0, u.clone());
        }
        next /= ln;
        left = next;
    }
    let sigma = norm(&w.t().dot(&left));
    (sigma, left)
}

/// Normalization applied to one layer: `W_eff = W / scale` with
/// `scale = max(sigma, 1)` and `sigma = ||W^T u||`.
#[derive(Debug, Clone)]
pub struct SpectralScale {
    pub sigma: f64,
    pub scale: f64,
    /// `W^T u / sigma`; the right singular direction paired with `u`.
    pub right: Array1<f64>,
}

impl SpectralScale {
    pub fn identity(cols: usize) -> Self {
        SpectralScale { sigma: 0.0, scale: 1.0, right: Array1::zeros(cols) }
    }

    /// Scale implied by a fixed left vector `u`. Treating `u` as a constant,
    /// `sigma(W) = ||W^T u||` is smooth with `d sigma / dW = u v^T`.
    pub fn from_left(w: &Array2<f64>, u: &Array1<f64>) -> Self {
        let wu = w.t().dot(u);
        let sigma = norm(&wu);
        let right = if sigma > 0.0 { wu / sigma } else { wu };
        SpectralScale { sigma, scale: sigma.max(1.0), right }
    }

    pub fn is_active(&self) -> bool {
        self.sigma > 1.0
    }
}
