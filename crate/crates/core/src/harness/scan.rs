//! Restricted isometry scans over small random operators, and the grid of
//! stability constants.

use super::config::{ExperimentConfig, ExperimentKind};
use super::fmt_sig;
use crate::ensembles::{generate, EnsembleSpec};
use crate::error::{Error, Result};
use crate::linops::MeasurementOperator;
use crate::rip::{
    binomial, check_exact_condition, check_stable_condition, stability_constants, RipReport,
    StabilityConstants,
};
use crate::rng::{derive_seed, Purpose};

/// `delta_S` across operators for one `S`. The pass fractions are `None`
/// when some operator lacks `delta_3S` or `delta_4S`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub s: usize,
    pub delta_mean: f64,
    pub delta_max: f64,
    pub exact_pass: Option<f64>,
    pub stable_pass: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RipScan {
    pub rows: Vec<ScanRow>,
    /// One exhaustive report per operator.
    pub reports: Vec<RipReport>,
    /// Sizes left out because they would exceed the subset budget.
    pub skipped: Vec<usize>,
}

impl RipScan {
    pub const CSV_HEADER: [&'static str; 6] = [
        "S",
        "delta_mean",
        "delta_max",
        "exact_pass",
        "stable_pass",
        "note",
    ];

    pub fn csv_records(&self) -> Vec<Vec<String>> {
        let frac = |f: Option<f64>| f.map(fmt_sig).unwrap_or_else(|| "na".into());
        let mut out: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.s.to_string(),
                    fmt_sig(r.delta_mean),
                    fmt_sig(r.delta_max),
                    frac(r.exact_pass),
                    frac(r.stable_pass),
                    String::new(),
                ]
            })
            .collect();
        if !self.skipped.is_empty() {
            let sizes: Vec<String> = self.skipped.iter().map(|s| s.to_string()).collect();
            let mut warn = vec!["warning".to_string()];
            warn.extend(["na", "na", "na", "na"].map(String::from));
            warn.push(format!(
                "subset budget exceeded; scan truncated, skipped S = {}",
                sizes.join(" ")
            ));
            out.push(warn);
        }
        out
    }
}

/// Exhaustive `delta_S` for `S = 1..=min(4 s_max, m)` on every operator, so
/// that both recovery conditions can be checked up to `s_max`.
pub fn rip_scan(ops: &[MeasurementOperator], s_max: usize, budget: u128) -> Result<RipScan> {
    let Some(first) = ops.first() else {
        return Err(Error::InvalidArgument("rip scan needs an operator".into()));
    };
    let m = first.cols();
    if ops.iter().any(|a| a.cols() != m) {
        return Err(Error::InvalidArgument(
            "rip scan operators must share a column count".into(),
        ));
    }
    let (sizes, skipped): (Vec<usize>, Vec<usize>) =
        (1..=(4 * s_max).min(m)).partition(|&s| binomial(m, s) <= budget);
    let reports = ops
        .iter()
        .map(|a| RipReport::exhaustive(a, sizes.iter().copied(), budget))
        .collect::<Result<Vec<_>>>()?;

    let fraction = |check: fn(&RipReport, usize) -> Result<bool>, s: usize| {
        let mut pass = 0usize;
        for r in &reports {
            match check(r, s) {
                Ok(true) => pass += 1,
                Ok(false) => {}
                Err(_) => return None,
            }
        }
        Some(pass as f64 / reports.len() as f64)
    };
    let rows = sizes
        .iter()
        .map(|&s| {
            let deltas: Vec<f64> = reports.iter().filter_map(|r| r.delta(s)).collect();
            ScanRow {
                s,
                delta_mean: deltas.iter().sum::<f64>() / deltas.len() as f64,
                delta_max: deltas.iter().cloned().fold(0.0, f64::max),
                exact_pass: fraction(check_exact_condition, s),
                stable_pass: fraction(check_stable_condition, s),
            }
        })
        .collect();
    Ok(RipScan {
        rows,
        reports,
        skipped,
    })
}

/// `trials` operators of the configured ensemble, one seed each.
pub fn run_rip_scan(config: &ExperimentConfig) -> Result<RipScan> {
    expect(config, ExperimentKind::RipScan)?;
    let ops = (0..config.trials)
        .map(|t| {
            let seed = derive_seed(config.master_seed, t as u64, Purpose::Ensemble);
            let mut spec = EnsembleSpec::new(config.ensemble, config.n, config.m, seed);
            spec.normalize_columns = config.normalize_columns;
            generate(&spec)
        })
        .collect::<Result<Vec<_>>>()?;
    rip_scan(&ops, config.s_max, config.subset_budget)
}

pub const CONSTANTS_HEADER: [&str; 11] = [
    "ratio", "delta", "t0_size", "m_size", "rho", "c_t0_m", "c_s", "c1_s", "c2_s", "valid", "note",
];

/// Constants for every `(M/|T0|, delta)` pair, with `|T0| = k` and both
/// `delta_M` and `delta_{M+|T0|}` set to `delta`.
pub fn run_constants(config: &ExperimentConfig) -> Result<Vec<(usize, StabilityConstants)>> {
    expect(config, ExperimentKind::Constants)?;
    let mut out = Vec::with_capacity(config.ratio.len() * config.delta.len());
    for &ratio in &config.ratio {
        for &delta in &config.delta {
            out.push((
                ratio,
                stability_constants(config.k, ratio * config.k, delta, delta),
            ));
        }
    }
    Ok(out)
}

pub fn constants_record(ratio: usize, c: &StabilityConstants) -> Vec<String> {
    vec![
        ratio.to_string(),
        fmt_sig(c.delta_m),
        c.t0_size.to_string(),
        c.m_size.to_string(),
        fmt_sig(c.rho),
        fmt_sig(c.c_t0_m),
        fmt_sig(c.c_s),
        fmt_sig(c.c1_s),
        fmt_sig(c.c2_s),
        c.is_valid().to_string(),
        if c.is_valid() {
            String::new()
        } else {
            "C_T0,M <= 0: bounds do not apply".into()
        },
    ]
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::DenseMatrix;
    use crate::rip::{delta_exhaustive, DEFAULT_SUBSET_BUDGET};

    #[test]
    fn orthonormal_operator_has_zero_deltas() {
        let a: MeasurementOperator = DenseMatrix::identity(6).into();
        let scan = rip_scan(&[a], 1, DEFAULT_SUBSET_BUDGET).unwrap();
        for r in &scan.rows {
            assert!(r.delta_max < 1e-12);
        }
        assert_eq!(scan.rows[0].exact_pass, Some(1.0));
        assert_eq!(scan.rows[0].stable_pass, Some(1.0));
    }

    #[test]
    fn repeated_column_fails_stable_condition() {
        let c = vec![0.6, 0.8, 0.0];
        let cols = vec![c.clone(), c, vec![0.0, 0.0, 1.0], vec![0.8, -0.6, 0.0]];
        let a: MeasurementOperator = DenseMatrix::from_columns(3, &cols).unwrap().into();
        let scan = rip_scan(&[a], 1, DEFAULT_SUBSET_BUDGET).unwrap();
        assert!((scan.rows[1].delta_max - 1.0).abs() < 1e-12);
        assert_eq!(scan.rows[0].stable_pass, Some(0.0));
    }

    #[test]
    fn matches_standalone_deltas() {
        let mut config = ExperimentConfig::defaults(ExperimentKind::RipScan);
        config.trials = 2;
        config.s_max = 1;
        let scan = run_rip_scan(&config).unwrap();
        let seed = derive_seed(config.master_seed, 1, Purpose::Ensemble);
        let a = generate(&EnsembleSpec::new(config.ensemble, 8, 16, seed).normalized()).unwrap();
        for s in 1..=4 {
            let d = delta_exhaustive(&a, s).unwrap();
            assert!((scan.reports[1].delta(s).unwrap() - d).abs() < 1e-12);
        }
    }

    #[test]
    fn budget_truncation_adds_warning_row() {
        let a: MeasurementOperator = DenseMatrix::identity(10).into();
        let scan = rip_scan(&[a], 2, 100).unwrap();
        assert!(scan.skipped.contains(&3));
        let recs = scan.csv_records();
        assert_eq!(recs.last().unwrap()[0], "warning");
        // S = 1 needs delta_3 and delta_4, both skipped
        assert_eq!(scan.rows[0].stable_pass, None);
    }
}
