//! Measurement perturbations and the matching choice of `eps`.

use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseKind {
    GaussianWhite { sigma: f64 },
    Quantize { num_levels: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    /// Number of standard deviations of `||e||^2` added to its mean.
    pub lambda: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn gaussian(sigma: f64, seed: u64) -> Self {
        Self {
            kind: NoiseKind::GaussianWhite { sigma },
            lambda: 2.0,
            seed,
        }
    }

    pub fn quantize(num_levels: usize) -> Self {
        Self {
            kind: NoiseKind::Quantize { num_levels },
            lambda: 2.0,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        match self.kind {
            NoiseKind::GaussianWhite { sigma } if !(sigma >= 0.0) || !sigma.is_finite() => Err(
                Error::InvalidArgument(format!("sigma must be >= 0, got {sigma}")),
            ),
            NoiseKind::Quantize { num_levels } if num_levels < 2 => Err(Error::InvalidArgument(
                format!("need at least 2 quantization levels, got {num_levels}"),
            )),
            _ => Ok(()),
        }
    }
}

/// `sigma * sqrt(n + lambda sqrt(2n))`: mean plus `lambda` standard
/// deviations of the chi-square `||e||^2`.
pub fn epsilon_gaussian(sigma: f64, n: usize, lambda: f64) -> f64 {
    let n = n as f64;
    sigma * (n + lambda * (2.0 * n).sqrt()).sqrt()
}

/// `sqrt(n q^2 / 12 + lambda sqrt(n) q^2 / (6 sqrt 5))`, treating each
/// rounding error as uniform on `(-q/2, q/2)`.
pub fn epsilon_quantization(q: f64, n: usize, lambda: f64) -> f64 {
    let n = n as f64;
    (n * q * q / 12.0 + lambda * n.sqrt() * q * q / (6.0 * 5f64.sqrt())).sqrt()
}

/// `num_levels` equally spaced values spanning `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantizer {
    pub lo: f64,
    pub step: f64,
    pub num_levels: usize,
}

impl Quantizer {
    pub fn spanning(values: &[f64], num_levels: usize) -> Result<Self> {
        if num_levels < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 quantization levels, got {num_levels}"
            )));
        }
        let (lo, hi) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(*v), hi.max(*v))
            });
        let step = (hi - lo) / (num_levels - 1) as f64;
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::InvalidArgument(
                "cannot quantize a constant (or empty) measurement vector".into(),
            ));
        }
        Ok(Self {
            lo,
            step,
            num_levels,
        })
    }

    pub fn level(&self, j: usize) -> f64 {
        self.lo + j as f64 * self.step
    }

    pub fn quantize_value(&self, v: f64) -> f64 {
        let j = ((v - self.lo) / self.step).round();
        let j = j.clamp(0.0, (self.num_levels - 1) as f64) as usize;
        self.level(j)
    }

    pub fn quantize(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|v| self.quantize_value(*v)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisyMeasurements {
    pub y_noisy: Vec<f64>,
    /// Realized perturbation `y_noisy - y`.
    pub e: Vec<f64>,
    pub epsilon: f64,
    /// Level spacing, for quantization.
    pub q: Option<f64>,
}

pub fn apply_noise(y: &[f64], spec: &NoiseSpec) -> Result<NoisyMeasurements> {
    spec.validate()?;
    let n = y.len();
    match spec.kind {
        NoiseKind::GaussianWhite { sigma } => {
            let e: Vec<f64> = if sigma == 0.0 {
                vec![0.0; n]
            } else {
                let normal = Normal::new(0.0, sigma)
                    .map_err(|err| Error::InvalidArgument(err.to_string()))?;
                let mut rng = stream(spec.seed, Purpose::Noise);
                (0..n).map(|_| normal.sample(&mut rng)).collect()
            };
            let y_noisy = y.iter().zip(&e).map(|(a, b)| a + b).collect();
            Ok(NoisyMeasurements {
                y_noisy,
                e,
                epsilon: epsilon_gaussian(sigma, n, spec.lambda),
                q: None,
            })
        }
        NoiseKind::Quantize { num_levels } => {
            let quant = Quantizer::spanning(y, num_levels)?;
            let y_noisy = quant.quantize(y);
            let e = y_noisy.iter().zip(y).map(|(a, b)| a - b).collect();
            Ok(NoisyMeasurements {
                y_noisy,
                e,
                epsilon: epsilon_quantization(quant.step, n, spec.lambda),
                q: Some(quant.step),
            })
        }
    }
}
