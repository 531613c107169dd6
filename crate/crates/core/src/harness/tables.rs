//! Recovery of 1D sparse and compressible signals across noise levels.

use std::time::Instant;

use rayon::prelude::*;

use super::config::{ExperimentConfig, ExperimentKind};
use super::fmt_sig;
use crate::ensembles::{generate, EnsembleSpec};
use crate::error::{Error, Result};
use crate::linops::{IndexSet, MeasurementOperator};
use crate::noisemodel::{apply_noise, epsilon_gaussian, NoiseSpec};
use crate::rng::{derive_seed, Purpose};
use crate::signals::{approx_errors, gen_compressible, gen_sparse_spikes, top_k};
use crate::solvers::{oracle_ls, solve, RecoveryProblem, SolverResult};
use crate::vector::{dist2, norm2};

/// Which test signals a table uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SignalFamily {
    Sparse { k: usize },
    Compressible { decay: f64, amplitude: f64 },
}

/// One solve: a signal, a noise level and its perturbation.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    /// Seed of the noise draw.
    pub seed: u64,
    pub sigma: f64,
    pub epsilon: f64,
    /// `||e||` actually drawn.
    pub e_norm: f64,
    pub recovery_error: f64,
    pub oracle_error: f64,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub wall_seconds: f64,
    /// The estimate itself; kept for invariant checks, not written out.
    pub x_sharp: Vec<f64>,
}

impl TrialRecord {
    pub const CSV_HEADER: [&'static str; 11] = [
        "trial",
        "seed",
        "sigma",
        "epsilon",
        "e_norm",
        "recovery_error",
        "oracle_error",
        "residual_norm",
        "iterations",
        "converged",
        "wall_seconds",
    ];

    pub fn csv_record(&self) -> Vec<String> {
        vec![
            self.trial.to_string(),
            self.seed.to_string(),
            fmt_sig(self.sigma),
            fmt_sig(self.epsilon),
            fmt_sig(self.e_norm),
            fmt_sig(self.recovery_error),
            fmt_sig(self.oracle_error),
            fmt_sig(self.residual_norm),
            self.iterations.to_string(),
            self.converged.to_string(),
            fmt_sig(self.wall_seconds),
        ]
    }
}

/// Averages over the converged trials of one noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub sigma: f64,
    pub epsilon: f64,
    pub mean_error: f64,
    pub mean_oracle_error: f64,
    pub trials: usize,
    pub converged: usize,
}

impl TableRow {
    pub const CSV_HEADER: [&'static str; 7] = [
        "sigma",
        "epsilon",
        "mean_error",
        "mean_oracle_error",
        "trials",
        "converged",
        "flagged",
    ];

    /// Set when some trial failed and was left out of the means.
    pub fn flagged(&self) -> bool {
        self.converged < self.trials
    }

    pub fn csv_record(&self) -> Vec<String> {
        vec![
            fmt_sig(self.sigma),
            fmt_sig(self.epsilon),
            fmt_sig(self.mean_error),
            fmt_sig(self.mean_oracle_error),
            self.trials.to_string(),
            self.converged.to_string(),
            self.flagged().to_string(),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct TableReport {
    pub rows: Vec<TableRow>,
    pub records: Vec<TrialRecord>,
    /// Mean `k`-term l2 approximation error of the signals.
    pub approx_error: f64,
    pub operator: MeasurementOperator,
    pub signals: Vec<Vec<f64>>,
}

/// Table 1: spikes, unless the config asks for compressible signals.
pub fn run_table1(config: &ExperimentConfig) -> Result<TableReport> {
    expect(config, ExperimentKind::Table1)?;
    run_table(config, SignalFamily::Sparse { k: config.k })
}

pub fn run_table2(config: &ExperimentConfig) -> Result<TableReport> {
    expect(config, ExperimentKind::Table2)?;
    run_table(
        config,
        SignalFamily::Compressible {
            decay: config.decay,
            amplitude: config.amplitude,
        },
    )
}

fn expect(config: &ExperimentConfig, kind: ExperimentKind) -> Result<()> {
    if config.experiment != kind {
        return Err(Error::InvalidArgument(format!(
            "config is for '{}', not '{kind}'",
            config.experiment
        )));
    }
    config.validate()
}

/// One shared operator from `master_seed`, `trials` signals reused at every
/// noise level, and fresh noise for every (noise level, trial) pair.
pub fn run_table(config: &ExperimentConfig, family: SignalFamily) -> Result<TableReport> {
    config.validate()?;
    let (m, n) = (config.m, config.n);
    let mut spec = EnsembleSpec::new(config.ensemble, n, m, config.master_seed);
    spec.normalize_columns = config.normalize_columns;
    let a = generate(&spec)?;

    let signals = (0..config.trials)
        .map(|t| {
            let seed = derive_seed(config.master_seed, t as u64 + 1, Purpose::Signal);
            match family {
                SignalFamily::Sparse { k } => gen_sparse_spikes(m, k, seed),
                SignalFamily::Compressible { decay, amplitude } => {
                    gen_compressible(m, decay, amplitude, seed)
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let k = match family {
        SignalFamily::Sparse { k } => k,
        SignalFamily::Compressible { .. } => config.k,
    };
    let supports = signals
        .iter()
        .map(|x| top_k(x, k).map(|(_, t)| t))
        .collect::<Result<Vec<IndexSet>>>()?;
    let clean = signals
        .iter()
        .map(|x| a.forward(x))
        .collect::<Result<Vec<_>>>()?;
    let approx_error = signals
        .iter()
        .map(|x| approx_errors(x, k).map(|e| e.l2_tail))
        .sum::<Result<f64>>()?
        / signals.len() as f64;

    let mut rows = Vec::with_capacity(config.sigma.len());
    let mut records = Vec::with_capacity(config.sigma.len() * config.trials);
    for (si, &sigma) in config.sigma.iter().enumerate() {
        let row_records: Vec<TrialRecord> = (0..config.trials)
            .into_par_iter()
            .map(|t| {
                let seed = derive_seed(
                    config.master_seed,
                    ((si as u64 + 1) << 32) | t as u64,
                    Purpose::Noise,
                );
                run_trial(config, &a, &signals[t], &clean[t], &supports[t], sigma, t, seed)
            })
            .collect::<Result<_>>()?;
        let good: Vec<&TrialRecord> = row_records.iter().filter(|r| r.converged).collect();
        let mean = |f: fn(&TrialRecord) -> f64| {
            if good.is_empty() {
                f64::NAN
            } else {
                good.iter().map(|r| f(r)).sum::<f64>() / good.len() as f64
            }
        };
        rows.push(TableRow {
            sigma,
            epsilon: epsilon_gaussian(sigma, n, config.lambda),
            mean_error: mean(|r| r.recovery_error),
            mean_oracle_error: mean(|r| r.oracle_error),
            trials: row_records.len(),
            converged: good.len(),
        });
        records.extend(row_records);
    }
    Ok(TableReport {
        rows,
        records,
        approx_error,
        operator: a,
        signals,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_trial(
    config: &ExperimentConfig,
    a: &MeasurementOperator,
    x0: &[f64],
    clean: &[f64],
    support: &IndexSet,
    sigma: f64,
    trial: usize,
    seed: u64,
) -> Result<TrialRecord> {
    let noise = NoiseSpec {
        lambda: config.lambda,
        ..NoiseSpec::gaussian(sigma, seed)
    };
    let noisy = apply_noise(clean, &noise)?;
    let clock = Instant::now();
    let outcome = solve(
        &RecoveryProblem::l1(a, noisy.y_noisy.clone(), noisy.epsilon),
        &config.solver,
    );
    let wall_seconds = clock.elapsed().as_secs_f64();
    // a failed solve is recorded as a non-converged trial, not an abort
    let res = match outcome {
        Ok(r) => r,
        Err(Error::Singular(_)) | Err(Error::Solver(_)) => SolverResult {
            x_sharp: vec![f64::NAN; x0.len()],
            objective_value: f64::NAN,
            residual_norm: f64::NAN,
            duality_gap: f64::NAN,
            newton_iterations: 0,
            barrier_stages: 0,
            cg_iterations: 0,
            converged: false,
            epsilon_used: noisy.epsilon,
            log: Vec::new(),
            message: "solver failed".into(),
        },
        Err(e) => return Err(e),
    };
    let oracle_error = oracle_ls(a, &noisy.y_noisy, support)
        .map(|x| dist2(&x, x0))
        .unwrap_or(f64::NAN);
    Ok(TrialRecord {
        trial,
        seed,
        sigma,
        epsilon: noisy.epsilon,
        e_norm: norm2(&noisy.e),
        recovery_error: dist2(&res.x_sharp, x0),
        oracle_error,
        residual_norm: res.residual_norm,
        iterations: res.newton_iterations,
        converged: res.converged,
        wall_seconds,
        x_sharp: res.x_sharp,
    })
}
