//! Image recovery from scrambled Fourier measurements: l1 on wavelet
//! coefficients against total variation, under the same perturbation.

use std::sync::Arc;
use std::time::Instant;

use crate::ensembles::{generate, EnsembleKind, EnsembleSpec};
use crate::error::Result;
use crate::linops::{compose, MeasurementOperator};
use crate::noisemodel::{apply_noise, NoiseSpec};
use crate::signals::approx_errors;
use crate::solvers::{solve, solve_tv, RecoveryProblem, SolverOptions};
use crate::vector::{dist2, norm2};
use crate::wavelets::WaveletTransform;

/// Perturbation applied to the measurements of one image run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ImageNoise {
    None,
    Gaussian { sigma: f64 },
    Quantize { num_levels: usize },
}

impl ImageNoise {
    pub fn label(&self) -> String {
        match self {
            ImageNoise::None => "none".into(),
            ImageNoise::Gaussian { .. } => "gaussian".into(),
            ImageNoise::Quantize { num_levels } => format!("quantize{num_levels}"),
        }
    }

    /// Size parameter for the metrics table: sigma or level count.
    pub fn parameter(&self) -> f64 {
        match *self {
            ImageNoise::None => 0.0,
            ImageNoise::Gaussian { sigma } => sigma,
            ImageNoise::Quantize { num_levels } => num_levels as f64,
        }
    }
}

/// Outcome of both recoveries for one perturbation.
#[derive(Debug, Clone)]
pub struct ImageRun {
    pub noise: ImageNoise,
    /// `||e||` actually realized.
    pub e_norm: f64,
    pub epsilon: f64,
    /// `||alpha0 - alpha0_S||` for the best `S`-term wavelet approximation.
    pub approx_error: f64,
    pub wavelet_error: f64,
    pub tv_error: f64,
    pub wavelet_converged: bool,
    pub tv_converged: bool,
    pub wavelet_seconds: f64,
    pub tv_seconds: f64,
    pub wavelet_image: Vec<f64>,
    pub tv_image: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ImageReport {
    pub side: usize,
    pub n: usize,
    pub s_terms: usize,
    pub runs: Vec<ImageRun>,
}

/// Measurement count mirroring 25000 of 65536, rounded to a multiple of 10
/// (1560 for a 64 x 64 image).
pub fn default_measurements(side: usize) -> usize {
    let m = (side * side) as f64;
    10 * (m * 2500.0 / 65536.0).round() as usize
}

/// Gaussian noise level scaled from 5e-4 at 256 x 256 so the
/// per-pixel signal to noise ratio is unchanged at other sizes.
pub fn default_sigma(side: usize) -> f64 {
    5e-4 * 256.0 / side as f64
}

/// Recovers `x0` (mean-free, row-major `side x side`) from `n` scrambled
/// Fourier measurements under each perturbation in turn. The constant row
/// is never measured, so the wavelet estimate has its mean removed, as the
/// TV estimate already has.
pub fn recover_image(
    x0: &[f64],
    side: usize,
    n: usize,
    seed: u64,
    noises: &[ImageNoise],
    opts: &SolverOptions,
) -> Result<ImageReport> {
    let m = side * side;
    let a = generate(&EnsembleSpec::new(EnsembleKind::ScrambledFourier, n, m, seed).without_dc())?;
    let wt = WaveletTransform::image(side, WaveletTransform::default_levels(side))?;
    let composed = compose(a.clone(), Arc::new(wt))?;
    let alpha0 = wt.dwt(x0)?;
    let s_terms = ((0.2 * n as f64).round() as usize).min(m);
    let approx_error = approx_errors(&alpha0, s_terms)?.l2_tail;
    let y = a.forward(x0)?;

    let mut runs = Vec::with_capacity(noises.len());
    for (idx, noise) in noises.iter().enumerate() {
        let (y_noisy, epsilon) = match *noise {
            ImageNoise::None => (y.clone(), 0.0),
            ImageNoise::Gaussian { sigma } => {
                let spec = NoiseSpec::gaussian(sigma, seed ^ (0x1000 + idx as u64));
                let nz = apply_noise(&y, &spec)?;
                (nz.y_noisy, nz.epsilon)
            }
            ImageNoise::Quantize { num_levels } => {
                let nz = apply_noise(&y, &NoiseSpec::quantize(num_levels))?;
                (nz.y_noisy, nz.epsilon)
            }
        };
        let e_norm = dist2(&y_noisy, &y);
        let (wavelet_image, wavelet, wavelet_seconds) =
            wavelet_recovery(&composed, &wt, &y_noisy, epsilon, opts)?;
        let clock = Instant::now();
        let tv = solve_tv(&RecoveryProblem::tv(&a, y_noisy, epsilon, side, side), opts)?;
        let tv_seconds = clock.elapsed().as_secs_f64();
        runs.push(ImageRun {
            noise: *noise,
            e_norm,
            epsilon,
            approx_error,
            wavelet_error: dist2(&wavelet_image, x0),
            tv_error: dist2(&tv.x_sharp, x0),
            wavelet_converged: wavelet,
            tv_converged: tv.converged,
            wavelet_seconds,
            tv_seconds,
            wavelet_image,
            tv_image: tv.x_sharp,
        });
    }
    Ok(ImageReport {
        side,
        n,
        s_terms,
        runs,
    })
}

fn wavelet_recovery(
    composed: &MeasurementOperator,
    wt: &WaveletTransform,
    y: &[f64],
    epsilon: f64,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, bool, f64)> {
    let clock = Instant::now();
    let res = solve(&RecoveryProblem::l1(composed, y.to_vec(), epsilon), opts)?;
    let mut x = wt.idwt(&res.x_sharp)?;
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter_mut().for_each(|v| *v -= mean);
    Ok((x, res.converged, clock.elapsed().as_secs_f64()))
}

/// Relative error of a recovery against a unit-norm or general truth.
pub fn relative_error(x: &[f64], x0: &[f64]) -> f64 {
    dist2(x, x0) / norm2(x0)
}
