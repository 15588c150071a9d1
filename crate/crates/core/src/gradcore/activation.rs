use serde::{Deserialize, Serialize};

/// Logistic sigmoid, stable for large |x|.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `(1/beta) * ln(1 + exp(beta * x))` without overflow.
pub fn softplus(x: f64, beta: f64) -> f64 {
    let bx = beta * x;
    // max(bx, 0) + ln(1 + exp(-|bx|))
    (bx.max(0.0) + (-bx.abs()).exp().ln_1p()) / beta
}

/// Derivative of [`softplus`] in `x`: the logistic function of `beta * x`.
pub fn softplus_grad(x: f64, beta: f64) -> f64 {
    logistic(beta * x)
}

/// Hidden-layer nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Activation {
    Softplus {
        beta: f64,
    },
    /// Piecewise-linear fallback used when the smooth activation is ablated.
    Relu,
}

impl Activation {
    #[inline]
    pub fn value(self, x: f64) -> f64 {
        match self {
            Activation::Softplus { beta } => softplus(x, beta),
            Activation::Relu => x.max(0.0),
        }
    }

    #[inline]
    pub fn first(self, x: f64) -> f64 {
        match self {
            Activation::Softplus { beta } => softplus_grad(x, beta),
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    #[inline]
    pub fn second(self, x: f64) -> f64 {
        match self {
            Activation::Softplus { beta } => {
                let s = logistic(beta * x);
                beta * s * (1.0 - s)
            }
            Activation::Relu => 0.0,
        }
    }
}
