//! Real sine/cosine measurement operators evaluated with an `m`-point FFT.
//!
//! The real trigonometric basis of `R^m` is ordered as
//! `[dc, cos_1, sin_1, cos_2, sin_2, ..., nyquist]`, where `cos_k(t) =
//! sqrt(2/m) cos(2 pi k t / m)`, `sin_k(t) = sqrt(2/m) sin(2 pi k t / m)`,
//! `dc = 1/sqrt(m)` and, for even `m`, `nyquist(t) = (-1)^t / sqrt(m)`.
//! The rows are orthonormal.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{IndexSet, OrthonormalTransform};
use crate::error::{check_len, Error, Result};

/// Which trigonometric function a basis index refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrigRow {
    Dc,
    Cos(usize),
    Sin(usize),
    Nyquist,
}

impl TrigRow {
    pub fn of_index(index: usize, m: usize) -> TrigRow {
        if index == 0 {
            TrigRow::Dc
        } else if m % 2 == 0 && index == m - 1 {
            TrigRow::Nyquist
        } else if index % 2 == 1 {
            TrigRow::Cos(index.div_ceil(2))
        } else {
            TrigRow::Sin(index / 2)
        }
    }

    /// Value of this (orthonormal) basis function at time `t`.
    pub fn value(self, t: usize, m: usize) -> f64 {
        let mf = m as f64;
        match self {
            TrigRow::Dc => 1.0 / mf.sqrt(),
            TrigRow::Nyquist => {
                if t % 2 == 0 {
                    1.0 / mf.sqrt()
                } else {
                    -1.0 / mf.sqrt()
                }
            }
            TrigRow::Cos(k) => (2.0 / mf).sqrt() * (2.0 * PI * ((k * t) % m) as f64 / mf).cos(),
            TrigRow::Sin(k) => (2.0 / mf).sqrt() * (2.0 * PI * ((k * t) % m) as f64 / mf).sin(),
        }
    }
}

/// The full orthonormal real trigonometric basis as a transform.
#[derive(Clone)]
pub struct RealFourierBasis {
    m: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for RealFourierBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RealFourierBasis").field("m", &self.m).finish()
    }
}

impl RealFourierBasis {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("basis size must be positive".into()));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            m,
            fwd: planner.plan_fft_forward(m),
            inv: planner.plan_fft_inverse(m),
        })
    }

    fn spectrum(&self, x: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = x.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        self.fwd.process(&mut buf);
        buf
    }

    /// Real part of `sum_k spec[k] e^{+2 pi i k t / m}`.
    fn synthesize_spectrum(&self, mut spec: Vec<Complex64>) -> Vec<f64> {
        self.inv.process(&mut spec);
        spec.into_iter().map(|c| c.re).collect()
    }

    fn coefficient(&self, spec: &[Complex64], index: usize) -> f64 {
        let mf = self.m as f64;
        match TrigRow::of_index(index, self.m) {
            TrigRow::Dc => spec[0].re / mf.sqrt(),
            TrigRow::Nyquist => spec[self.m / 2].re / mf.sqrt(),
            TrigRow::Cos(k) => (2.0 / mf).sqrt() * spec[k].re,
            TrigRow::Sin(k) => -(2.0 / mf).sqrt() * spec[k].im,
        }
    }

    fn place(&self, spec: &mut [Complex64], index: usize, value: f64) {
        let mf = self.m as f64;
        match TrigRow::of_index(index, self.m) {
            TrigRow::Dc => spec[0].re += value / mf.sqrt(),
            TrigRow::Nyquist => spec[self.m / 2].re += value / mf.sqrt(),
            TrigRow::Cos(k) => spec[k].re += (2.0 / mf).sqrt() * value,
            TrigRow::Sin(k) => spec[k].im -= (2.0 / mf).sqrt() * value,
        }
    }

    /// Coefficients for a subset of basis rows.
    pub fn analyze_rows(&self, x: &[f64], rows: &[usize]) -> Result<Vec<f64>> {
        check_len("fourier analysis input", self.m, x.len())?;
        let spec = self.spectrum(x);
        Ok(rows.iter().map(|r| self.coefficient(&spec, *r)).collect())
    }

    /// `sum_r values[r] * row_r`, for a subset of basis rows.
    pub fn synthesize_rows(&self, values: &[f64], rows: &[usize]) -> Result<Vec<f64>> {
        check_len("fourier synthesis input", rows.len(), values.len())?;
        let mut spec = vec![Complex64::new(0.0, 0.0); self.m];
        for (r, v) in rows.iter().zip(values) {
            self.place(&mut spec, *r, *v);
        }
        Ok(self.synthesize_spectrum(spec))
    }

    /// Squared column norms of the row-subset matrix, `sum_r row_r(t)^2`.
    ///
    /// Uses `cos^2 = (1 + cos 2a)/2` and `sin^2 = (1 - cos 2a)/2`, so a
    /// single inverse FFT covers all columns.
    pub fn subset_column_norms_sq(&self, rows: &[usize]) -> Vec<f64> {
        let m = self.m;
        let mf = m as f64;
        let mut spec = vec![Complex64::new(0.0, 0.0); m];
        for r in rows {
            match TrigRow::of_index(*r, m) {
                TrigRow::Dc | TrigRow::Nyquist => {}
                TrigRow::Cos(k) => spec[(2 * k) % m].re += 1.0,
                TrigRow::Sin(k) => spec[(2 * k) % m].re -= 1.0,
            }
        }
        let base = rows.len() as f64 / mf;
        self.synthesize_spectrum(spec)
            .into_iter()
            .map(|v| base + v / mf)
            .collect()
    }
}

impl OrthonormalTransform for RealFourierBasis {
    fn len(&self) -> usize {
        self.m
    }

    fn analyze(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("fourier analysis input", self.m, x.len())?;
        let spec = self.spectrum(x);
        Ok((0..self.m).map(|r| self.coefficient(&spec, r)).collect())
    }

    fn synthesize(&self, alpha: &[f64]) -> Result<Vec<f64>> {
        check_len("fourier synthesis input", self.m, alpha.len())?;
        let mut spec = vec![Complex64::new(0.0, 0.0); self.m];
        for (r, v) in alpha.iter().enumerate() {
            self.place(&mut spec, r, *v);
        }
        Ok(self.synthesize_spectrum(spec))
    }
}

/// `n` rows of the real trigonometric basis, optionally with rescaled
/// columns.
#[derive(Debug, Clone)]
pub struct PartialFourier {
    basis: RealFourierBasis,
    rows: IndexSet,
    column_scale: Option<Vec<f64>>,
}

impl PartialFourier {
    pub fn new(m: usize, rows: IndexSet) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidArgument("no frequency rows selected".into()));
        }
        if rows.universe() != m {
            return Err(Error::DimensionMismatch {
                context: "frequency index universe",
                expected: m,
                actual: rows.universe(),
            });
        }
        Ok(Self {
            basis: RealFourierBasis::new(m)?,
            rows,
            column_scale: None,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    pub fn cols(&self) -> usize {
        self.basis.m
    }

    pub fn frequencies(&self) -> &IndexSet {
        &self.rows
    }

    pub fn column_scale(&self) -> Option<&[f64]> {
        self.column_scale.as_deref()
    }

    pub fn normalize_columns(&mut self) -> Result<()> {
        let norms = self.basis.subset_column_norms_sq(self.rows.as_slice());
        let scale = norms
            .iter()
            .enumerate()
            .map(|(t, n)| {
                if *n > 1e-300 {
                    Ok(1.0 / n.sqrt())
                } else {
                    Err(Error::InvalidArgument(format!("column {t} is zero")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        self.column_scale = Some(scale);
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("forward input", self.cols(), x.len())?;
        match &self.column_scale {
            Some(s) => {
                let z: Vec<f64> = x.iter().zip(s).map(|(a, b)| a * b).collect();
                self.basis.analyze_rows(&z, self.rows.as_slice())
            }
            None => self.basis.analyze_rows(x, self.rows.as_slice()),
        }
    }

    pub fn adjoint(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len("adjoint input", self.rows(), u.len())?;
        let mut out = self.basis.synthesize_rows(u, self.rows.as_slice())?;
        if let Some(s) = &self.column_scale {
            for (o, c) in out.iter_mut().zip(s) {
                *o *= c;
            }
        }
        Ok(out)
    }

    pub fn column_norms_sq(&self) -> Vec<f64> {
        let mut n = self.basis.subset_column_norms_sq(self.rows.as_slice());
        if let Some(s) = &self.column_scale {
            for (v, c) in n.iter_mut().zip(s) {
                *v *= c * c;
            }
        }
        n
    }
}

/// Partial Fourier rows applied to a permuted copy of the input: column `j`
/// of this operator is column `perm[j]` of the partial Fourier operator.
#[derive(Debug, Clone)]
pub struct ScrambledFourier {
    inner: PartialFourier,
    perm: Vec<usize>,
}

impl ScrambledFourier {
    pub fn new(inner: PartialFourier, perm: Vec<usize>) -> Result<Self> {
        let m = inner.cols();
        check_len("column permutation", m, perm.len())?;
        let mut seen = vec![false; m];
        for &p in &perm {
            if p >= m || seen[p] {
                return Err(Error::InvalidArgument(
                    "column permutation is not a bijection".into(),
                ));
            }
            seen[p] = true;
        }
        Ok(Self { inner, perm })
    }

    pub fn rows(&self) -> usize {
        self.inner.rows()
    }

    pub fn cols(&self) -> usize {
        self.inner.cols()
    }

    pub fn partial(&self) -> &PartialFourier {
        &self.inner
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn normalize_columns(&mut self) -> Result<()> {
        self.inner.normalize_columns()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("forward input", self.cols(), x.len())?;
        let mut z = vec![0.0; x.len()];
        for (xj, &p) in x.iter().zip(&self.perm) {
            z[p] = *xj;
        }
        self.inner.forward(&z)
    }

    pub fn adjoint(&self, u: &[f64]) -> Result<Vec<f64>> {
        let w = self.inner.adjoint(u)?;
        Ok(self.perm.iter().map(|&p| w[p]).collect())
    }

    pub fn column_norms_sq(&self) -> Vec<f64> {
        let n = self.inner.column_norms_sq();
        self.perm.iter().map(|&p| n[p]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_row(index: usize, m: usize) -> Vec<f64> {
        let r = TrigRow::of_index(index, m);
        (0..m).map(|t| r.value(t, m)).collect()
    }

    #[test]
    fn basis_rows_are_orthonormal() {
        for m in [1usize, 2, 7, 8, 16] {
            let rows: Vec<Vec<f64>> = (0..m).map(|i| brute_row(i, m)).collect();
            for a in 0..m {
                for b in 0..m {
                    let d: f64 = rows[a].iter().zip(&rows[b]).map(|(x, y)| x * y).sum();
                    let want = if a == b { 1.0 } else { 0.0 };
                    assert!((d - want).abs() < 1e-12, "m={m} a={a} b={b} d={d}");
                }
            }
        }
    }

    #[test]
    fn fft_analysis_matches_direct_sums() {
        for m in [6usize, 8, 9] {
            let basis = RealFourierBasis::new(m).unwrap();
            let x: Vec<f64> = (0..m).map(|t| ((t * 7 + 3) % 5) as f64 - 1.7).collect();
            let c = basis.analyze(&x).unwrap();
            for (i, ci) in c.iter().enumerate() {
                let direct: f64 = brute_row(i, m).iter().zip(&x).map(|(a, b)| a * b).sum();
                assert!((ci - direct).abs() < 1e-12);
            }
            let back = basis.synthesize(&c).unwrap();
            for (a, b) in back.iter().zip(&x) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn subset_column_norms_match_direct() {
        let m = 12;
        let basis = RealFourierBasis::new(m).unwrap();
        let rows = [0usize, 2, 3, 6, 11];
        let n = basis.subset_column_norms_sq(&rows);
        for (t, nt) in n.iter().enumerate() {
            let direct: f64 = rows
                .iter()
                .map(|r| TrigRow::of_index(*r, m).value(t, m).powi(2))
                .sum();
            assert!((nt - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn permutation_must_be_bijection() {
        let pf = PartialFourier::new(4, IndexSet::new(vec![0, 1], 4).unwrap()).unwrap();
        assert!(ScrambledFourier::new(pf.clone(), vec![0, 0, 1, 2]).is_err());
        assert!(ScrambledFourier::new(pf, vec![0, 1, 2]).is_err());
    }
}
