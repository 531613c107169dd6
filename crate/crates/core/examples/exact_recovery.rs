//! Noiseless basis pursuit: 50 spikes out of 1024 from 300 Gaussian
//! measurements are recovered to solver precision.

use stable_recovery::ensembles::{generate, EnsembleKind, EnsembleSpec};
use stable_recovery::signals::gen_sparse_spikes;
use stable_recovery::solvers::{solve_bp, SolverOptions};
use stable_recovery::vector::{dist2, norm2};

fn main() -> stable_recovery::Result<()> {
    let (n, m, k) = (300, 1024, 50);
    let a = generate(&EnsembleSpec::new(EnsembleKind::GaussianIid, n, m, 7))?;
    let x0 = gen_sparse_spikes(m, k, 11)?;
    let y = a.forward(&x0)?;

    let res = solve_bp(&a, &y, &SolverOptions::default())?;
    println!(
        "{} after {} iterations, relative error {:.2e}",
        res.message,
        res.newton_iterations,
        dist2(&res.x_sharp, &x0) / norm2(&x0)
    );
    Ok(())
}
