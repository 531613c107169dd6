//! Power-law signals are not sparse, so even tiny noise leaves an error of
//! the order of the best 50-term approximation.

use stable_recovery::ensembles::{generate, EnsembleKind, EnsembleSpec};
use stable_recovery::noisemodel::{apply_noise, NoiseSpec};
use stable_recovery::signals::{
    approx_errors, gen_compressible, COMPRESSIBLE_AMPLITUDE, COMPRESSIBLE_DECAY,
};
use stable_recovery::solvers::{solve, RecoveryProblem, SolverOptions};
use stable_recovery::vector::dist2;

fn main() -> stable_recovery::Result<()> {
    let (n, m) = (300, 1024);
    let a = generate(&EnsembleSpec::new(EnsembleKind::GaussianIid, n, m, 7))?;
    let x0 = gen_compressible(m, COMPRESSIBLE_DECAY, COMPRESSIBLE_AMPLITUDE, 3)?;
    let floor = approx_errors(&x0, 50)?;
    println!("50-term approximation error {:.3}", floor.l2_tail);

    for sigma in [0.01, 0.1, 0.5] {
        let noisy = apply_noise(&a.forward(&x0)?, &NoiseSpec::gaussian(sigma, 5))?;
        let res = solve(
            &RecoveryProblem::l1(&a, noisy.y_noisy, noisy.epsilon),
            &SolverOptions::default(),
        )?;
        println!("sigma {sigma:<5} error {:.3}", dist2(&res.x_sharp, &x0));
    }
    Ok(())
}
