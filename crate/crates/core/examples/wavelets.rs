//! The orthonormal D8 wavelet transform of an image: perfect
//! reconstruction, energy preservation and fast coefficient decay.

use stable_recovery::harness::image::harbour_scene;
use stable_recovery::signals::approx_errors;
use stable_recovery::vector::{dist2, norm2};
use stable_recovery::wavelets::WaveletTransform;

fn main() -> stable_recovery::Result<()> {
    let side = 64;
    let x = harbour_scene(side).centered_unit()?;
    let wt = WaveletTransform::image(side, WaveletTransform::default_levels(side))?;
    let alpha = wt.dwt(&x)?;
    println!("levels {}", wt.levels());
    println!("round trip error {:.1e}", dist2(&wt.idwt(&alpha)?, &x));
    println!("| ||alpha|| - ||x|| | = {:.1e}", (norm2(&alpha) - norm2(&x)).abs());
    for s in [50, 200, 800] {
        println!("best {s:>3}-term error {:.4}", approx_errors(&alpha, s)?.l2_tail);
    }
    Ok(())
}
