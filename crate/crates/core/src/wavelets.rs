//! Orthonormal Daubechies 8-tap (4 vanishing moments) discrete wavelet
//! transform with periodic boundaries, in 1D and separable 2D form.
//!
//! Coefficients are stored in place: for a signal, `[a_J | d_J | ... | d_1]`;
//! for an image, the usual quadrant layout with the coarsest approximation
//! in the top-left `side / 2^J` block.

use crate::error::{check_len, Error, Result};
use crate::linops::OrthonormalTransform;

/// Scaling filter `h`, sum = sqrt(2).
pub const D8_LOWPASS: [f64; 8] = [
    0.230_377_813_308_896_5,
    0.714_846_570_552_915_7,
    0.630_880_767_929_858_9,
    -0.027_983_769_416_859_854,
    -0.187_034_811_719_093_09,
    0.030_841_381_835_560_764,
    0.032_883_011_666_885_2,
    -0.010_597_401_785_069_032,
];

const TAPS: usize = D8_LOWPASS.len();

/// Wavelet filter `g[j] = (-1)^j h[7 - j]`.
pub fn d8_highpass() -> [f64; 8] {
    let mut g = [0.0; TAPS];
    for (j, gj) in g.iter_mut().enumerate() {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        *gj = sign * D8_LOWPASS[TAPS - 1 - j];
    }
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Signal(usize),
    Image(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WaveletTransform {
    layout: Layout,
    levels: usize,
}

impl WaveletTransform {
    /// 1D transform of a length-`len` signal.
    pub fn signal(len: usize, levels: usize) -> Result<Self> {
        Self::new(Layout::Signal(len), levels)
    }

    /// 2D transform of a `side x side` image.
    pub fn image(side: usize, levels: usize) -> Result<Self> {
        Self::new(Layout::Image(side), levels)
    }

    /// `log2(side) - 3` levels, so the coarsest band is 8 samples wide.
    pub fn default_levels(side: usize) -> usize {
        (side.max(1).trailing_zeros() as usize).saturating_sub(3).max(1)
    }

    fn new(layout: Layout, levels: usize) -> Result<Self> {
        let side = match layout {
            Layout::Signal(n) | Layout::Image(n) => n,
        };
        if side < 2 || !side.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "wavelet length {side} is not a power of two >= 2"
            )));
        }
        if levels == 0 {
            return Err(Error::InvalidArgument("levels must be >= 1".into()));
        }
        // the last analysis step must see at least one full filter length
        if levels > 63 || side >> (levels - 1) < TAPS {
            return Err(Error::InvalidArgument(format!(
                "{levels} levels too deep for length {side} with an 8-tap filter"
            )));
        }
        Ok(Self { layout, levels })
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn total_len(&self) -> usize {
        match self.layout {
            Layout::Signal(n) => n,
            Layout::Image(s) => s * s,
        }
    }

    pub fn dwt(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("dwt input", self.total_len(), x.len())?;
        let mut out = x.to_vec();
        let mut scratch = Vec::new();
        match self.layout {
            Layout::Signal(n) => {
                let mut len = n;
                for _ in 0..self.levels {
                    analyze_step(&mut out[..len], &mut scratch);
                    len /= 2;
                }
            }
            Layout::Image(side) => {
                let mut len = side;
                let mut line = vec![0.0; side];
                for _ in 0..self.levels {
                    for r in 0..len {
                        analyze_step(&mut out[r * side..r * side + len], &mut scratch);
                    }
                    for c in 0..len {
                        for r in 0..len {
                            line[r] = out[r * side + c];
                        }
                        analyze_step(&mut line[..len], &mut scratch);
                        for r in 0..len {
                            out[r * side + c] = line[r];
                        }
                    }
                    len /= 2;
                }
            }
        }
        Ok(out)
    }

    pub fn idwt(&self, alpha: &[f64]) -> Result<Vec<f64>> {
        check_len("idwt input", self.total_len(), alpha.len())?;
        let mut out = alpha.to_vec();
        let mut scratch = Vec::new();
        match self.layout {
            Layout::Signal(n) => {
                for level in (0..self.levels).rev() {
                    let len = n >> level;
                    synthesize_step(&mut out[..len], &mut scratch);
                }
            }
            Layout::Image(side) => {
                let mut line = vec![0.0; side];
                for level in (0..self.levels).rev() {
                    let len = side >> level;
                    for c in 0..len {
                        for r in 0..len {
                            line[r] = out[r * side + c];
                        }
                        synthesize_step(&mut line[..len], &mut scratch);
                        for r in 0..len {
                            out[r * side + c] = line[r];
                        }
                    }
                    for r in 0..len {
                        synthesize_step(&mut out[r * side..r * side + len], &mut scratch);
                    }
                }
            }
        }
        Ok(out)
    }
}

/// One periodic analysis step: `buf` becomes `[approx | detail]`.
fn analyze_step(buf: &mut [f64], scratch: &mut Vec<f64>) {
    let len = buf.len();
    let half = len / 2;
    let g = d8_highpass();
    scratch.clear();
    scratch.resize(len, 0.0);
    for k in 0..half {
        let (mut a, mut d) = (0.0, 0.0);
        for j in 0..TAPS {
            let v = buf[(2 * k + j) % len];
            a += D8_LOWPASS[j] * v;
            d += g[j] * v;
        }
        scratch[k] = a;
        scratch[half + k] = d;
    }
    buf.copy_from_slice(scratch);
}

/// Transpose of [`analyze_step`].
fn synthesize_step(buf: &mut [f64], scratch: &mut Vec<f64>) {
    let len = buf.len();
    let half = len / 2;
    let g = d8_highpass();
    scratch.clear();
    scratch.resize(len, 0.0);
    for k in 0..half {
        let a = buf[k];
        let d = buf[half + k];
        for j in 0..TAPS {
            scratch[(2 * k + j) % len] += D8_LOWPASS[j] * a + g[j] * d;
        }
    }
    buf.copy_from_slice(scratch);
}

impl OrthonormalTransform for WaveletTransform {
    fn len(&self) -> usize {
        self.total_len()
    }

    fn analyze(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.dwt(x)
    }

    fn synthesize(&self, alpha: &[f64]) -> Result<Vec<f64>> {
        self.idwt(alpha)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector::{dot, norm2};

    #[test]
    fn filter_is_orthonormal_with_four_vanishing_moments() {
        let h = D8_LOWPASS;
        let g = d8_highpass();
        assert!((h.iter().sum::<f64>() - 2f64.sqrt()).abs() < 1e-14);
        for shift in (0..TAPS).step_by(2) {
            let hh: f64 = (0..TAPS - shift).map(|k| h[k] * h[k + shift]).sum();
            let want = if shift == 0 { 1.0 } else { 0.0 };
            assert!((hh - want).abs() < 1e-14, "shift {shift}: {hh}");
        }
        for p in 0..4 {
            let moment: f64 = g.iter().enumerate().map(|(j, v)| v * (j as f64).powi(p)).sum();
            assert!(moment.abs() < 1e-10, "moment {p} = {moment}");
        }
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(WaveletTransform::signal(48, 1).is_err());
        assert!(WaveletTransform::signal(64, 0).is_err());
        assert!(WaveletTransform::signal(64, 4).is_ok());
        assert!(WaveletTransform::signal(64, 5).is_err());
        assert!(WaveletTransform::image(100, 2).is_err());
        let t = WaveletTransform::signal(64, 3).unwrap();
        assert!(t.dwt(&[0.0; 32]).is_err());
        assert_eq!(WaveletTransform::default_levels(64), 3);
        assert_eq!(WaveletTransform::default_levels(256), 5);
    }

    #[test]
    fn constants_have_no_detail() {
        let t = WaveletTransform::signal(64, 3).unwrap();
        let x = vec![2.5; 64];
        let a = t.dwt(&x).unwrap();
        assert!(a[8..].iter().all(|d| d.abs() < 1e-12));
        assert!((norm2(&a[..8]) - norm2(&x)).abs() < 1e-12);

        let t2 = WaveletTransform::image(32, 2).unwrap();
        let img = vec![-1.0; 32 * 32];
        let c = t2.dwt(&img).unwrap();
        for r in 0..32 {
            for col in 0..32 {
                if r >= 8 || col >= 8 {
                    assert!(c[r * 32 + col].abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn unit_coefficients_synthesize_unit_vectors() {
        let t = WaveletTransform::image(16, 1).unwrap();
        let mut e = vec![0.0; 256];
        for j in 0..256 {
            e[j] = 1.0;
            let x = t.idwt(&e).unwrap();
            assert!((norm2(&x) - 1.0).abs() < 1e-12);
            e[j] = 0.0;
        }
    }

    #[test]
    fn transform_is_linear() {
        let t = WaveletTransform::signal(32, 2).unwrap();
        let x: Vec<f64> = (0..32).map(|i| (i as f64 * 0.37).sin()).collect();
        let y: Vec<f64> = (0..32).map(|i| (i as f64 * 1.1).cos()).collect();
        let combo: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 2.0 * a - 3.0 * b).collect();
        let lhs = t.idwt(&combo).unwrap();
        let (ix, iy) = (t.idwt(&x).unwrap(), t.idwt(&y).unwrap());
        for k in 0..32 {
            assert!((lhs[k] - (2.0 * ix[k] - 3.0 * iy[k])).abs() < 1e-12);
        }
        // analysis is the adjoint of synthesis
        assert!((dot(&t.dwt(&x).unwrap(), &y) - dot(&x, &t.idwt(&y).unwrap())).abs() < 1e-12);
    }
}
