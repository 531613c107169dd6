//! Grayscale images: 8-bit PGM (P5) files and two synthetic test scenes.

use std::path::Path;

use image::{GrayImage, ImageFormat, Luma};

use crate::error::{Error, Result};
use crate::vector::norm2;

/// Row-major grayscale image with real-valued pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct Picture {
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<f64>,
}

impl Picture {
    pub fn new(height: usize, width: usize, pixels: Vec<f64>) -> Result<Self> {
        crate::error::check_len("picture pixels", height * width, pixels.len())?;
        Ok(Self {
            height,
            width,
            pixels,
        })
    }

    /// Side length of a square power-of-two image, the only shape the image
    /// experiment accepts.
    pub fn square_side(&self) -> Result<usize> {
        if self.height != self.width || !self.height.is_power_of_two() || self.height < 8 {
            return Err(Error::InvalidArgument(format!(
                "image must be square with a power-of-two side >= 8, got {}x{}",
                self.height, self.width
            )));
        }
        Ok(self.height)
    }

    /// Mean removed, then scaled to unit l2 norm.
    pub fn centered_unit(&self) -> Result<Vec<f64>> {
        let mean = self.pixels.iter().sum::<f64>() / self.pixels.len() as f64;
        let mut x: Vec<f64> = self.pixels.iter().map(|v| v - mean).collect();
        let nrm = norm2(&x);
        if nrm == 0.0 {
            return Err(Error::InvalidArgument("image is constant".into()));
        }
        x.iter_mut().for_each(|v| *v /= nrm);
        Ok(x)
    }
}

/// Reads an 8-bit grayscale PGM; pixels land in `[0, 1]`.
pub fn read_pgm(path: &Path) -> Result<Picture> {
    let img = image::open(path)?.to_luma8();
    let (w, h) = img.dimensions();
    let pixels = img.pixels().map(|p| p.0[0] as f64 / 255.0).collect();
    Picture::new(h as usize, w as usize, pixels)
}

/// Writes `pixels` as binary PGM after mapping `[min, max]` onto `[0, 255]`.
pub fn write_pgm(path: &Path, pic: &Picture) -> Result<()> {
    let lo = pic.pixels.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = pic.pixels.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut img = GrayImage::new(pic.width as u32, pic.height as u32);
    for (k, v) in pic.pixels.iter().enumerate() {
        let level = ((v - lo) / span * 255.0).round().clamp(0.0, 255.0) as u8;
        img.put_pixel((k % pic.width) as u32, (k / pic.width) as u32, Luma([level]));
    }
    img.save_with_format(path, ImageFormat::Pnm)?;
    Ok(())
}

/// Piecewise-smooth harbour scene standing in for a photograph: shaded sky
/// and water, a hull, a cabin, a mast and a sun disc with soft edges.
pub fn harbour_scene(side: usize) -> Picture {
    let mut pixels = Vec::with_capacity(side * side);
    for i in 0..side {
        for j in 0..side {
            let v = (i as f64 + 0.5) / side as f64;
            let u = (j as f64 + 0.5) / side as f64;
            let mut p = if v < 0.55 {
                0.75 - 0.35 * v + 0.05 * u
            } else {
                0.35 + 0.15 * (v - 0.55) + 0.02 * (12.0 * u).sin() * (v - 0.55)
            };
            let sun = ((u - 0.78).powi(2) + (v - 0.18).powi(2)).sqrt();
            p += 0.2 * (1.0 - sun / 0.09).clamp(0.0, 1.0).sqrt();
            let hull_top = 0.52;
            let hull = v > hull_top && v < 0.66 && (u - 0.4).abs() < 0.28 - 1.2 * (v - hull_top);
            if hull {
                p = 0.12 + 0.3 * (v - hull_top);
            }
            if v > 0.42 && v <= hull_top && u > 0.3 && u < 0.48 {
                p = 0.92 - 0.2 * (u - 0.3);
            }
            if v > 0.12 && v <= hull_top && (u - 0.55).abs() < 0.012 {
                p = 0.2;
            }
            pixels.push(p);
        }
    }
    Picture {
        height: side,
        width: side,
        pixels,
    }
}

/// Piecewise-constant rectangles: a sparse gradient, so TV recovers it
/// exactly from enough noiseless measurements.
pub fn blocks(side: usize) -> Picture {
    let f = |a: usize, b: usize| a * side / b;
    let rects = [
        (f(1, 8), f(5, 8), f(1, 8), f(3, 8), 1.0),
        (f(3, 8), f(7, 8), f(1, 2), f(7, 8), -0.7),
        (f(1, 16), f(1, 4), f(5, 8), f(15, 16), 0.5),
        (f(11, 16), f(15, 16), f(1, 16), f(5, 16), 0.35),
    ];
    let mut pixels = vec![0.0; side * side];
    for (r0, r1, c0, c1, val) in rects {
        for i in r0..r1 {
            for j in c0..c1 {
                pixels[i * side + j] += val;
            }
        }
    }
    Picture {
        height: side,
        width: side,
        pixels,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip_preserves_levels() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.pgm");
        let pic = Picture::new(2, 3, vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0]).unwrap();
        write_pgm(&path, &pic).unwrap();
        let back = read_pgm(&path).unwrap();
        assert_eq!((back.height, back.width), (2, 3));
        for (a, b) in back.pixels.iter().zip(&pic.pixels) {
            assert!((a - b).abs() <= 0.5 / 255.0 + 1e-12);
        }
    }

    #[test]
    fn centered_unit_has_zero_mean_and_unit_norm() {
        let x = harbour_scene(16).centered_unit().unwrap();
        assert!(x.iter().sum::<f64>().abs() < 1e-12);
        assert!((norm2(&x) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shape_checks() {
        assert!(blocks(64).square_side().is_ok());
        let odd = Picture::new(12, 12, vec![0.0; 144]).unwrap();
        assert!(odd.square_side().is_err());
    }
}
