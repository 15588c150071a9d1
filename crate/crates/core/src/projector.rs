//! Manifold projection: partial forward diffusion followed by the exact
//! posterior-mean denoiser of a codeword-mixture prior, blended with the
//! input.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gradcore::Embedding;
use crate::latentworld::Codebook;
use crate::rng::Rng;

/// Linear variance schedule `beta_t`, `t = 1..=steps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSchedule {
    pub steps: usize,
    pub beta_min: f64,
    pub beta_max: f64,
}

impl Default for NoiseSchedule {
    fn default() -> Self {
        NoiseSchedule { steps: 1000, beta_min: 1e-4, beta_max: 2e-2 }
    }
}

impl NoiseSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || !(self.beta_min > 0.0 && self.beta_min <= self.beta_max && self.beta_max < 1.0) {
            return Err(Error::config("noise schedule needs steps >= 1 and 0 < beta_min <= beta_max < 1"));
        }
        Ok(())
    }

    pub fn beta(&self, t: usize) -> f64 {
        assert!((1..=self.steps).contains(&t), "diffusion step {t} outside 1..={}", self.steps);
        if self.steps == 1 {
            return self.beta_min;
        }
        self.beta_min + (self.beta_max - self.beta_min) * (t - 1) as f64 / (self.steps - 1) as f64
    }

    /// Cumulative product of `1 - beta_s` for `s <= t`; 1 at `t = 0`.
    pub fn alpha_bar(&self, t: usize) -> f64 {
        (1..=t).map(|s| 1.0 - self.beta(s)).product()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectorConfig {
    pub schedule: NoiseSchedule,
    pub t_diff: usize,
    pub alpha: f64,
    /// Width of each codeword cluster in the prior; `None` uses the world's
    /// encoder jitter.
    pub prior_sigma: Option<f64>,
}

impl Default for ProjectorConfig {
    fn default() -> Self {
        ProjectorConfig { schedule: NoiseSchedule::default(), t_diff: 100, alpha: 0.3, prior_sigma: None }
    }
}

impl ProjectorConfig {
    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        if !(1..=self.schedule.steps).contains(&self.t_diff) {
            return Err(Error::config(format!("t_diff {} outside 1..={}", self.t_diff, self.schedule.steps)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::config("projection alpha must lie in [0, 1]"));
        }
        if let Some(s) = self.prior_sigma {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::config("prior_sigma must be finite and non-negative"));
            }
        }
        Ok(())
    }
}

/// `z_t = sqrt(alpha_bar_t) z + sqrt(1 - alpha_bar_t) eps`, `eps ~ N(0, I)`.
pub fn forward_noise(z: &Embedding, t: usize, schedule: &NoiseSchedule, rng: &mut Rng) -> Embedding {
    if t == 0 {
        return z.clone();
    }
    let ab = schedule.alpha_bar(t);
    let (a, b) = (ab.sqrt(), (1.0 - ab).sqrt());
    let mut out = z.clone();
    for v in out.as_mut_slice() {
        *v = a * *v + b * rng.sample::<f64, _>(StandardNormal);
    }
    out
}

/// Row-wise posterior mean `E[z_0 | z_t]` for the prior
/// `z_0 ~ uniform codeword + N(0, prior_sigma^2 I)`.
///
/// With `y = z_t / sqrt(ab)` and `r^2 = (1 - ab) / ab`, each codeword gets
/// weight proportional to `exp(-|y - c|^2 / (2 (prior_sigma^2 + r^2)))` and
/// contributes its Gaussian posterior mean `c + kappa (y - c)`,
/// `kappa = prior_sigma^2 / (prior_sigma^2 + r^2)`.
pub fn denoise_estimate(
    z_t: &Embedding,
    t: usize,
    codebook: &Codebook,
    schedule: &NoiseSchedule,
    prior_sigma: f64,
) -> Embedding {
    assert_eq!(z_t.cols(), codebook.dim(), "embedding width differs from codebook dimension");
    let ab = schedule.alpha_bar(t);
    let r2 = (1.0 - ab) / ab;
    let var = prior_sigma * prior_sigma + r2;
    let kappa = if var > 0.0 { prior_sigma * prior_sigma / var } else { 0.0 };
    let scale = ab.sqrt().recip();
    let cw = codebook.codewords();
    let d = codebook.dim();
    let mut out = z_t.clone();
    let mut logw = vec![0.0; codebook.alphabet_size()];
    for row in out.as_mut_slice().chunks_exact_mut(d) {
        row.iter_mut().for_each(|v| *v *= scale);
        for (a, c) in cw.outer_iter().enumerate() {
            logw[a] = c.iter().zip(row.iter()).map(|(c, y)| (y - c) * (y - c)).sum::<f64>();
        }
        let weights = if var > 0.0 {
            let lw: Vec<f64> = logw.iter().map(|sq| -sq / (2.0 * var)).collect();
            let top = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let w: Vec<f64> = lw.iter().map(|l| (l - top).exp()).collect();
            let total: f64 = w.iter().sum();
            w.into_iter().map(|x| x / total).collect::<Vec<_>>()
        } else {
            // Noise-free limit: all mass on the nearest codeword.
            let best = logw.iter().enumerate().fold(0, |b, (i, &v)| if v < logw[b] { i } else { b });
            (0..logw.len()).map(|i| f64::from(u8::from(i == best))).collect()
        };
        for (j, y) in row.iter_mut().enumerate() {
            let mean: f64 = weights.iter().zip(cw.column(j)).map(|(w, c)| w * c).sum();
            *y = kappa * *y + (1.0 - kappa) * mean;
        }
    }
    out
}

/// Both branches of a projection, for inspection.
#[derive(Debug, Clone)]
pub struct Projection {
    pub output: Embedding,
    /// Denoiser output; `None` when `alpha = 0` skipped the noising.
    pub denoised: Option<Embedding>,
}

/// The projection operator bound to one codebook.
#[derive(Debug, Clone)]
pub struct Projector {
    codebook: Codebook,
    config: ProjectorConfig,
    prior_sigma: f64,
}

impl Projector {
    /// `default_sigma` is used when the config leaves `prior_sigma` unset.
    pub fn new(codebook: Codebook, config: ProjectorConfig, default_sigma: f64) -> Result<Self> {
        config.validate()?;
        let prior_sigma = config.prior_sigma.unwrap_or(default_sigma);
        if !(prior_sigma >= 0.0) {
            return Err(Error::config("prior_sigma must be non-negative"));
        }
        Ok(Projector { codebook, config, prior_sigma })
    }

    pub fn config(&self) -> &ProjectorConfig {
        &self.config
    }

    pub fn codebook(&self) -> &Codebook {
        &self.codebook
    }

    pub fn prior_sigma(&self) -> f64 {
        self.prior_sigma
    }

    pub fn alpha(&self) -> f64 {
        self.config.alpha
    }

    /// Same projector with a different blend strength.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        let config = ProjectorConfig { alpha, ..self.config.clone() };
        Projector::new(self.codebook.clone(), config, self.prior_sigma)
    }

    /// Denoiser output for `z`: noise to `t_diff`, then posterior mean.
    pub fn denoise(&self, z: &Embedding, rng: &mut Rng) -> Embedding {
        let t = self.config.t_diff;
        let z_t = forward_noise(z, t, &self.config.schedule, rng);
        denoise_estimate(&z_t, t, &self.codebook, &self.config.schedule, self.prior_sigma)
    }

    /// `(1 - alpha) z + alpha Pi(z)`; the identity without any noise draw at
    /// `alpha = 0`.
    pub fn project_traced(&self, z: &Embedding, rng: &mut Rng) -> Projection {
        let alpha = self.config.alpha;
        if alpha == 0.0 {
            return Projection { output: z.clone(), denoised: None };
        }
        let pi = self.denoise(z, rng);
        let output = if alpha == 1.0 {
            pi.clone()
        } else {
            let mut out = z.clone();
            for (o, p) in out.as_mut_slice().iter_mut().zip(pi.as_slice()) {
                *o = (1.0 - alpha) * *o + alpha * p;
            }
            out
        };
        Projection { output, denoised: Some(pi) }
    }

    pub fn project(&self, z: &Embedding, rng: &mut Rng) -> Embedding {
        self.project_traced(z, rng).output
    }
}
