use crate::error::{check_len, Error, Result};

/// Forward-difference gradient of a row-major `height x width` image.
///
/// Output is interleaved per pixel: `[dv(0,0), dh(0,0), dv(0,1), ...]` with
/// `dv(i,j) = x[i+1][j] - x[i][j]` and `dh(i,j) = x[i][j+1] - x[i][j]`.
/// Differences that would leave the grid are zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gradient2D {
    height: usize,
    width: usize,
}

impl Gradient2D {
    pub fn new(height: usize, width: usize) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidArgument(format!(
                "grid must be non-empty, got {height}x{width}"
            )));
        }
        Ok(Self { height, width })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    /// Vertical and horizontal difference images.
    pub fn diffs(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        check_len("gradient input", self.pixels(), x.len())?;
        let (h, w) = (self.height, self.width);
        let mut dv = vec![0.0; h * w];
        let mut dh = vec![0.0; h * w];
        for i in 0..h {
            for j in 0..w {
                let k = i * w + j;
                if i + 1 < h {
                    dv[k] = x[k + w] - x[k];
                }
                if j + 1 < w {
                    dh[k] = x[k + 1] - x[k];
                }
            }
        }
        Ok((dv, dh))
    }

    /// `Dv^T p + Dh^T q`.
    pub fn adjoint_diffs(&self, p: &[f64], q: &[f64]) -> Result<Vec<f64>> {
        check_len("vertical difference input", self.pixels(), p.len())?;
        check_len("horizontal difference input", self.pixels(), q.len())?;
        let (h, w) = (self.height, self.width);
        let mut out = vec![0.0; h * w];
        for i in 0..h {
            for j in 0..w {
                let k = i * w + j;
                if i + 1 < h {
                    out[k + w] += p[k];
                    out[k] -= p[k];
                }
                if j + 1 < w {
                    out[k + 1] += q[k];
                    out[k] -= q[k];
                }
            }
        }
        Ok(out)
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (dv, dh) = self.diffs(x)?;
        Ok(dv.iter().zip(&dh).flat_map(|(a, b)| [*a, *b]).collect())
    }

    pub fn adjoint(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len("gradient adjoint input", 2 * self.pixels(), u.len())?;
        let p: Vec<f64> = u.iter().step_by(2).copied().collect();
        let q: Vec<f64> = u.iter().skip(1).step_by(2).copied().collect();
        self.adjoint_diffs(&p, &q)
    }

    pub fn column_norms_sq(&self) -> Vec<f64> {
        let (h, w) = (self.height, self.width);
        let mut out = vec![0.0; h * w];
        for i in 0..h {
            for j in 0..w {
                let k = i * w + j;
                if i + 1 < h {
                    out[k] += 1.0;
                    out[k + w] += 1.0;
                }
                if j + 1 < w {
                    out[k] += 1.0;
                    out[k + 1] += 1.0;
                }
            }
        }
        out
    }
}
