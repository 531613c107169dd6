//! Restricted isometry constants by subset enumeration, the recovery
//! conditions built on them, and the closed-form stability constants.

use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::index;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linops::{DenseMatrix, MeasurementOperator};
use crate::rng::{stream, Purpose};
use crate::signals::approx_errors;

/// Default cap on the number of subsets an exhaustive scan may visit.
pub const DEFAULT_SUBSET_BUDGET: u128 = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RipMethod {
    Exhaustive,
    /// Maximum over this many random subsets (a lower bound on delta).
    Sampled(u64),
}

impl RipMethod {
    pub fn label(&self) -> String {
        match self {
            RipMethod::Exhaustive => "exhaustive".into(),
            RipMethod::Sampled(k) => format!("sampled({k})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RipEntry {
    pub delta: f64,
    pub method: RipMethod,
    pub subsets_examined: u64,
}

/// Measured `delta_S` for a set of sparsity levels.
#[derive(Debug, Clone, PartialEq)]
pub struct RipReport {
    pub n: usize,
    pub m: usize,
    pub entries: BTreeMap<usize, RipEntry>,
}

impl RipReport {
    pub fn new(n: usize, m: usize) -> Self {
        Self {
            n,
            m,
            entries: BTreeMap::new(),
        }
    }

    /// Report with the given deltas, tagged exhaustive; mostly for tests and
    /// hypothetical condition checks.
    pub fn from_deltas(n: usize, m: usize, deltas: &[(usize, f64)]) -> Self {
        let mut r = Self::new(n, m);
        for &(s, delta) in deltas {
            r.entries.insert(
                s,
                RipEntry {
                    delta,
                    method: RipMethod::Exhaustive,
                    subsets_examined: 0,
                },
            );
        }
        r
    }

    /// Exhaustive deltas for every `S` in `sizes`, sharing one Gram matrix.
    pub fn exhaustive(
        a: &MeasurementOperator,
        sizes: impl IntoIterator<Item = usize>,
        budget: u128,
    ) -> Result<Self> {
        let gram = a.materialize()?.gram();
        let mut r = Self::new(a.rows(), a.cols());
        for s in sizes {
            r.entries.insert(s, exhaustive_from_gram(&gram, s, budget)?);
        }
        Ok(r)
    }

    pub fn delta(&self, s: usize) -> Option<f64> {
        self.entries.get(&s).map(|e| e.delta)
    }

    fn require(&self, s: usize) -> Result<f64> {
        self.delta(s).ok_or(Error::MissingDelta(s))
    }

    /// CSV with columns `S,delta,method,subsets_examined`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["S", "delta", "method", "subsets_examined"])?;
        for (s, e) in &self.entries {
            out.write_record([
                s.to_string(),
                crate::harness::fmt_sig(e.delta),
                e.method.label(),
                e.subsets_examined.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Binomial coefficient, saturating at `u128::MAX`.
pub fn binomial(m: usize, s: usize) -> u128 {
    if s > m {
        return 0;
    }
    let s = s.min(m - s);
    let mut acc: u128 = 1;
    for i in 0..s {
        acc = match acc.checked_mul((m - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Eigenvalues of a small symmetric matrix (row-major, `size x size`) by
/// cyclic Jacobi rotations.
pub fn symmetric_eigenvalues(mut a: Vec<f64>, size: usize) -> Vec<f64> {
    jacobi_in_place(&mut a, size)
}

fn jacobi_in_place(a: &mut [f64], size: usize) -> Vec<f64> {
    debug_assert_eq!(a.len(), size * size);
    let scale: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    if scale == 0.0 {
        return vec![0.0; size];
    }
    for _sweep in 0..100 {
        let off: f64 = (0..size)
            .flat_map(|p| (0..size).filter(move |q| *q != p).map(move |q| (p, q)))
            .map(|(p, q)| a[p * size + q] * a[p * size + q])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..size {
            for q in p + 1..size {
                let apq = a[p * size + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = a[p * size + p];
                let aqq = a[q * size + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..size {
                    let akp = a[k * size + p];
                    let akq = a[k * size + q];
                    a[k * size + p] = c * akp - s * akq;
                    a[k * size + q] = s * akp + c * akq;
                }
                for k in 0..size {
                    let apk = a[p * size + k];
                    let aqk = a[q * size + k];
                    a[p * size + k] = c * apk - s * aqk;
                    a[q * size + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..size).map(|i| a[i * size + i]).collect()
}

fn subset_deviation(gram: &DenseMatrix, subset: &[usize], buf: &mut Vec<f64>) -> f64 {
    let s = subset.len();
    buf.clear();
    for &i in subset {
        for &j in subset {
            buf.push(gram.get(i, j));
        }
    }
    let eig = jacobi_in_place(buf, s);
    let (lo, hi) = eig
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(*v), hi.max(*v))
        });
    (hi - 1.0).max(1.0 - lo)
}

/// Advances `c` (strictly increasing, values < `limit`) to the next
/// combination in colexicographic order. Returns false after the last one.
fn next_colex(c: &mut [usize], limit: usize) -> bool {
    let s = c.len();
    for i in 0..s {
        let cap = if i + 1 < s { c[i + 1] } else { limit };
        if c[i] + 1 < cap {
            c[i] += 1;
            for (k, v) in c.iter_mut().enumerate().take(i) {
                *v = k;
            }
            return true;
        }
    }
    false
}

fn exhaustive_from_gram(gram: &DenseMatrix, s: usize, budget: u128) -> Result<RipEntry> {
    let m = gram.cols();
    if s == 0 || s > m {
        return Err(Error::InvalidArgument(format!(
            "sparsity level {s} outside [1, {m}]"
        )));
    }
    let count = binomial(m, s);
    if count > budget {
        return Err(Error::BudgetExceeded {
            m,
            s,
            count,
            budget,
        });
    }
    // Subsets grouped by their largest element; the remaining s-1 elements
    // run over [0, last) in colex order.
    let delta = (s - 1..m)
        .into_par_iter()
        .map(|last| {
            let mut buf = Vec::with_capacity(s * s);
            let mut head: Vec<usize> = (0..s - 1).collect();
            let mut subset = vec![0; s];
            let mut best: f64 = 0.0;
            loop {
                subset[..s - 1].copy_from_slice(&head);
                subset[s - 1] = last;
                best = best.max(subset_deviation(gram, &subset, &mut buf));
                if s == 1 || !next_colex(&mut head, last) {
                    break;
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max);
    Ok(RipEntry {
        delta,
        method: RipMethod::Exhaustive,
        subsets_examined: count as u64,
    })
}

/// `delta_S` as the worst eigenvalue deviation of `A_T^T A_T` over every
/// `|T| = S`, with the default subset budget.
pub fn delta_exhaustive(a: &MeasurementOperator, s: usize) -> Result<f64> {
    Ok(delta_exhaustive_budgeted(a, s, DEFAULT_SUBSET_BUDGET)?.delta)
}

pub fn delta_exhaustive_budgeted(
    a: &MeasurementOperator,
    s: usize,
    budget: u128,
) -> Result<RipEntry> {
    if s == 0 || s > a.cols() {
        return Err(Error::InvalidArgument(format!(
            "sparsity level {s} outside [1, {}]",
            a.cols()
        )));
    }
    let count = binomial(a.cols(), s);
    if count > budget {
        return Err(Error::BudgetExceeded {
            m: a.cols(),
            s,
            count,
            budget,
        });
    }
    exhaustive_from_gram(&a.materialize()?.gram(), s, budget)
}

/// Lower bound on `delta_S` from `num_subsets` random supports drawn in
/// sequence from one seeded stream, so a longer run extends a shorter one.
/// When `num_subsets >= C(m, S)` every subset is visited instead.
pub fn delta_sampled(
    a: &MeasurementOperator,
    s: usize,
    num_subsets: u64,
    seed: u64,
) -> Result<RipEntry> {
    let m = a.cols();
    if s == 0 || s > m {
        return Err(Error::InvalidArgument(format!(
            "sparsity level {s} outside [1, {m}]"
        )));
    }
    if num_subsets == 0 {
        return Err(Error::InvalidArgument("num_subsets must be >= 1".into()));
    }
    let gram = a.materialize()?.gram();
    let total = binomial(m, s);
    if num_subsets as u128 >= total {
        let e = exhaustive_from_gram(&gram, s, u128::MAX)?;
        return Ok(RipEntry {
            method: RipMethod::Sampled(num_subsets),
            ..e
        });
    }
    let mut rng = stream(seed, Purpose::Subsets);
    let mut buf = Vec::with_capacity(s * s);
    let mut best: f64 = 0.0;
    for _ in 0..num_subsets {
        let mut subset = index::sample(&mut rng, m, s).into_vec();
        subset.sort_unstable();
        best = best.max(subset_deviation(&gram, &subset, &mut buf));
    }
    Ok(RipEntry {
        delta: best,
        method: RipMethod::Sampled(num_subsets),
        subsets_examined: num_subsets,
    })
}

/// `delta_S + delta_2S + delta_3S < 1`.
pub fn check_exact_condition(report: &RipReport, s: usize) -> Result<bool> {
    Ok(report.require(s)? + report.require(2 * s)? + report.require(3 * s)? < 1.0)
}

/// `delta_3S + 3 delta_4S < 2`.
pub fn check_stable_condition(report: &RipReport, s: usize) -> Result<bool> {
    Ok(report.require(3 * s)? + 3.0 * report.require(4 * s)? < 2.0)
}

/// Constants of the stable-recovery error bounds for a support of size
/// `t0_size` and a block size `m_size`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityConstants {
    pub t0_size: usize,
    pub m_size: usize,
    pub rho: f64,
    pub delta_m: f64,
    pub delta_m_plus_t0: f64,
    /// `sqrt(1 - delta_{M+|T0|}) - sqrt(rho) sqrt(1 + delta_M)`
    pub c_t0_m: f64,
    /// Factor on `eps` for sparse signals.
    pub c_s: f64,
    /// Factor on `eps` for arbitrary signals.
    pub c1_s: f64,
    /// Factor on the scaled l1 tail for arbitrary signals.
    pub c2_s: f64,
}

impl StabilityConstants {
    /// The bounds only hold when the denominator `c_t0_m` is positive.
    pub fn is_valid(&self) -> bool {
        self.c_t0_m > 0.0
    }
}

/// Evaluates the constants; never fails, check [`StabilityConstants::is_valid`].
pub fn stability_constants(
    t0_size: usize,
    m_size: usize,
    delta_m: f64,
    delta_m_plus_t0: f64,
) -> StabilityConstants {
    let rho = t0_size as f64 / m_size as f64;
    let sr = rho.sqrt();
    let c_t0_m = (1.0 - delta_m_plus_t0).sqrt() - sr * (1.0 + delta_m).sqrt();
    let c_s = 2.0 * (1.0 + rho).sqrt() / c_t0_m;
    let c1_s = 2.0 * (1.0 + sr) / c_t0_m;
    let c2_s = 2.0 * (1.0 + sr) * sr * (1.0 + delta_m).sqrt() / c_t0_m + 2.0 * sr;
    StabilityConstants {
        t0_size,
        m_size,
        rho,
        delta_m,
        delta_m_plus_t0,
        c_t0_m,
        c_s,
        c1_s,
        c2_s,
    }
}

/// Constants at `M = 3S` when only `delta_4S` is known: `delta_3S` is
/// bounded by `delta_4S` and both are set to it.
pub fn constants_from_delta_4s(s: usize, delta_4s: f64) -> StabilityConstants {
    stability_constants(s, 3 * s, delta_4s, delta_4s)
}

/// `C1_S eps + C2_S ||x0 - x0_S||_1 / sqrt(S)`.
pub fn theorem2_bound(
    constants: &StabilityConstants,
    epsilon: f64,
    x0: &[f64],
    s: usize,
) -> Result<f64> {
    if !constants.is_valid() {
        return Err(Error::InvalidArgument(format!(
            "stability constants are invalid (C_T0,M = {})",
            constants.c_t0_m
        )));
    }
    if s != constants.t0_size {
        return Err(Error::InvalidArgument(format!(
            "S = {s} does not match the constants' |T0| = {}",
            constants.t0_size
        )));
    }
    let tails = approx_errors(x0, s)?;
    Ok(constants.c1_s * epsilon + constants.c2_s * tails.scaled)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn colex_enumerates_every_subset_once() {
        let m = 7;
        for s in 1..=4 {
            let mut seen = std::collections::HashSet::new();
            for last in s - 1..m {
                let mut head: Vec<usize> = (0..s - 1).collect();
                loop {
                    let mut sub = head.clone();
                    sub.push(last);
                    assert!(sub.windows(2).all(|w| w[0] < w[1]));
                    assert!(seen.insert(sub));
                    if s == 1 || !next_colex(&mut head, last) {
                        break;
                    }
                }
            }
            assert_eq!(seen.len() as u128, binomial(m, s));
        }
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(16, 2), 120);
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(binomial(1000, 500), u128::MAX);
    }

    #[test]
    fn jacobi_on_known_matrix() {
        let mut e = symmetric_eigenvalues(vec![2.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 5.0], 3);
        e.sort_by(f64::total_cmp);
        for (a, b) in e.iter().zip([1.0, 3.0, 5.0]) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn repeated_column_has_delta_one() {
        let a = MeasurementOperator::from(
            DenseMatrix::new(2, 2, vec![1.0, 1.0, 0.0, 0.0]).unwrap(),
        );
        assert!((delta_exhaustive(&a, 2).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(delta_exhaustive(&a, 1).unwrap(), 0.0);
    }

    #[test]
    fn budget_guard() {
        let a = MeasurementOperator::from(DenseMatrix::identity(30));
        assert!(matches!(
            delta_exhaustive_budgeted(&a, 10, 1000),
            Err(Error::BudgetExceeded { .. })
        ));
        assert!(delta_exhaustive(&a, 0).is_err());
        assert!(delta_sampled(&a, 31, 5, 0).is_err());
        assert!(delta_sampled(&a, 3, 0, 0).is_err());
    }

    #[test]
    fn conditions() {
        let zeros = RipReport::from_deltas(1, 1, &[(1, 0.0), (2, 0.0), (3, 0.0), (4, 0.0)]);
        assert!(check_exact_condition(&zeros, 1).unwrap());
        assert!(check_stable_condition(&zeros, 1).unwrap());

        let third = 1.0 / 3.0;
        let r = RipReport::from_deltas(1, 1, &[(1, third), (2, third), (3, third)]);
        assert!(!check_exact_condition(&r, 1).unwrap());
        let r = RipReport::from_deltas(1, 1, &[(1, 0.1), (2, 0.3), (3, 0.5)]);
        assert!(check_exact_condition(&r, 1).unwrap());

        let r = RipReport::from_deltas(1, 1, &[(3, 0.5), (4, 0.5)]);
        assert!(!check_stable_condition(&r, 1).unwrap());
        let r = RipReport::from_deltas(1, 1, &[(3, 0.49), (4, 0.49)]);
        assert!(check_stable_condition(&r, 1).unwrap());

        assert!(matches!(
            check_exact_condition(&RipReport::from_deltas(1, 1, &[(1, 0.0)]), 1),
            Err(Error::MissingDelta(2))
        ));
    }
}
