//! Symmetric banded matrices and their Cholesky factors.

use crate::error::{Error, Result};

/// Lower band of a symmetric `n x n` matrix with half-bandwidth `bw`,
/// stored row by row: entry `(i, j)`, `i - bw <= j <= i`, lives at
/// `i * (bw + 1) + bw - (i - j)`.
#[derive(Debug, Clone)]
pub(crate) struct SymBand {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl SymBand {
    pub(crate) fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.bw + 1) + self.bw + j - i
    }

    /// Adds `v` to entries `(i, j)` and `(j, i)` (once when `i == j`).
    pub(crate) fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        debug_assert!(i - j <= self.bw);
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub(crate) fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.data[self.idx(i, i)]).collect()
    }

    pub(crate) fn add_diagonal(&mut self, v: f64) {
        for i in 0..self.n {
            let k = self.idx(i, i);
            self.data[k] += v;
        }
    }

    #[cfg(test)]
    pub(crate) fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let row = &self.data[self.idx(i, lo)..=self.idx(i, i)];
            let mut acc = 0.0;
            for (a, j) in row.iter().zip(lo..=i) {
                acc += a * x[j];
                if j < i {
                    out[j] += a * x[i];
                }
            }
            out[i] += acc;
        }
        out
    }

    pub(crate) fn cholesky(mut self) -> Result<BandCholesky> {
        let (n, bw) = (self.n, self.bw);
        for i in 0..n {
            let lo_i = i.saturating_sub(bw);
            for j in lo_i..=i {
                let lo = lo_i.max(j.saturating_sub(bw));
                let ri = self.idx(i, lo);
                let rj = self.idx(j, lo);
                let len = j - lo;
                let mut s = self.data[self.idx(i, j)];
                for k in 0..len {
                    s -= self.data[ri + k] * self.data[rj + k];
                }
                let at = self.idx(i, j);
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::Singular(format!(
                            "banded matrix is not positive definite at row {i}"
                        )));
                    }
                    self.data[at] = s.sqrt();
                } else {
                    self.data[at] = s / self.data[self.idx(j, j)];
                }
            }
        }
        Ok(BandCholesky { l: self })
    }
}

#[derive(Debug, Clone)]
pub(crate) struct BandCholesky {
    l: SymBand,
}

impl BandCholesky {
    /// `L^{-1} b` in place.
    pub(crate) fn forward_solve(&self, b: &mut [f64]) {
        let l = &self.l;
        for i in 0..l.n {
            let lo = i.saturating_sub(l.bw);
            let start = l.idx(i, lo);
            let mut s = b[i];
            for (a, j) in l.data[start..start + i - lo].iter().zip(lo..i) {
                s -= a * b[j];
            }
            b[i] = s / l.data[l.idx(i, i)];
        }
    }

    /// `L^{-T} b` in place.
    pub(crate) fn backward_solve(&self, b: &mut [f64]) {
        let l = &self.l;
        for i in (0..l.n).rev() {
            let bi = b[i] / l.data[l.idx(i, i)];
            b[i] = bi;
            let lo = i.saturating_sub(l.bw);
            let start = l.idx(i, lo);
            for (a, j) in l.data[start..start + i - lo].iter().zip(lo..i) {
                b[j] -= a * bi;
            }
        }
    }

    #[cfg(test)]
    pub(crate) fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.forward_solve(&mut x);
        self.backward_solve(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, DVector};

    fn random_band(n: usize, bw: usize) -> (SymBand, DMatrix<f64>) {
        let mut band = SymBand::zeros(n, bw);
        let mut dense = DMatrix::zeros(n, n);
        let mut v = 0.37;
        for i in 0..n {
            for j in i.saturating_sub(bw)..i {
                v = (v * 7.3 + 0.11) % 1.0;
                let a = v - 0.5;
                band.add(i, j, a);
                dense[(i, j)] += a;
                dense[(j, i)] += a;
            }
            band.add(i, i, 2.0 * bw as f64);
            dense[(i, i)] += 2.0 * bw as f64;
        }
        (band, dense)
    }

    #[test]
    fn matvec_matches_dense() {
        let (band, dense) = random_band(17, 4);
        let x: Vec<f64> = (0..17).map(|i| (i as f64).sin()).collect();
        let want = &dense * DVector::from_column_slice(&x);
        for (a, b) in band.matvec(&x).iter().zip(want.iter()) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn solve_inverts() {
        let (band, dense) = random_band(23, 5);
        let b: Vec<f64> = (0..23).map(|i| (i as f64 * 0.7).cos()).collect();
        let x = band.cholesky().unwrap().solve(&b);
        let back = &dense * DVector::from_column_slice(&x);
        for (a, c) in back.iter().zip(&b) {
            assert_relative_eq!(a, c, epsilon = 1e-10);
        }
    }

    #[test]
    fn indefinite_is_rejected() {
        let mut band = SymBand::zeros(3, 1);
        band.add(0, 0, 1.0);
        band.add(1, 0, 2.0);
        band.add(1, 1, 1.0);
        band.add(2, 2, 1.0);
        assert!(band.cholesky().is_err());
    }
}
