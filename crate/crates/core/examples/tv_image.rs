//! Total-variation recovery of a piecewise-constant image from scrambled
//! Fourier measurements, with and without noise. Pass a side length
//! (power of two, default 32).

use stable_recovery::ensembles::{generate, EnsembleKind, EnsembleSpec};
use stable_recovery::harness::image::blocks;
use stable_recovery::harness::imaging::{default_measurements, relative_error};
use stable_recovery::noisemodel::{apply_noise, NoiseSpec};
use stable_recovery::solvers::{solve_tv, tv_norm, RecoveryProblem, SolverOptions};

fn main() -> stable_recovery::Result<()> {
    let side: usize = std::env::args().nth(1).map_or(Ok(32), |s| s.parse()).unwrap_or(32);
    let x0 = blocks(side).centered_unit()?;
    let n = default_measurements(side);
    let spec = EnsembleSpec::new(EnsembleKind::ScrambledFourier, n, side * side, 3).without_dc();
    let a = generate(&spec)?;
    let y = a.forward(&x0)?;
    println!("{side}x{side}, {n} measurements, TV(x0) = {:.3}", tv_norm(&x0, side, side)?);

    let opts = SolverOptions::default();
    let exact = solve_tv(&RecoveryProblem::tv(&a, y.clone(), 0.0, side, side), &opts)?;
    println!("noiseless: relative error {:.1e}", relative_error(&exact.x_sharp, &x0));

    let noisy = apply_noise(&y, &NoiseSpec::gaussian(1e-3, 9))?;
    let res = solve_tv(&RecoveryProblem::tv(&a, noisy.y_noisy, noisy.epsilon, side, side), &opts)?;
    println!(
        "sigma 1e-3: relative error {:.3}, {} iterations",
        relative_error(&res.x_sharp, &x0),
        res.newton_iterations
    );
    Ok(())
}
